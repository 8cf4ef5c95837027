#include "ggclass/cli.hpp"

int main(int argc, char** argv) { return ggc::cli_dispatch(argc, argv); }
