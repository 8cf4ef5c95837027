#include "ggclass/numeric.hpp"

#include <algorithm>
#include <numeric>

namespace ggc {

std::optional<double> auc_binary(std::span<const double> scores, std::span<const int> positive) {
    if (scores.size() != positive.size()) throw std::invalid_argument("auc_binary: size mismatch");
    const std::size_t n = scores.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

    // Walk tie groups in ascending score order; a positive beats every negative
    // strictly below it and gets half credit for negatives in its own group.
    double wins = 0.0;
    double negatives_below = 0.0;
    double total_pos = 0.0;
    double total_neg = 0.0;
    for (std::size_t g = 0; g < n;) {
        std::size_t end = g;
        double pos = 0.0;
        double neg = 0.0;
        while (end < n && scores[order[end]] == scores[order[g]]) {
            (positive[order[end]] ? pos : neg) += 1.0;
            ++end;
        }
        wins += pos * negatives_below + 0.5 * pos * neg;
        negatives_below += neg;
        total_pos += pos;
        total_neg += neg;
        g = end;
    }
    if (total_pos == 0.0 || total_neg == 0.0) return std::nullopt;
    return wins / (total_pos * total_neg);
}

std::optional<double> roc_auc_ovo(const Eigen::MatrixXd& probabilities, std::span<const int> labels) {
    const auto c = static_cast<int>(probabilities.cols());
    if (static_cast<std::size_t>(probabilities.rows()) != labels.size())
        throw std::invalid_argument("roc_auc_ovo: size mismatch");
    if (c < 2) throw std::invalid_argument("roc_auc_ovo: need at least two classes");

    double total = 0.0;
    int pairs = 0;
    for (int a = 0; a < c; ++a) {
        for (int b = a + 1; b < c; ++b) {
            std::vector<double> score_a;
            std::vector<double> score_b;
            std::vector<int> is_a;
            std::vector<int> is_b;
            for (std::size_t i = 0; i < labels.size(); ++i) {
                if (labels[i] != a && labels[i] != b) continue;
                const auto row = static_cast<Eigen::Index>(i);
                score_a.push_back(probabilities(row, a));
                score_b.push_back(probabilities(row, b));
                is_a.push_back(labels[i] == a ? 1 : 0);
                is_b.push_back(labels[i] == b ? 1 : 0);
            }
            const auto a_vs_b = auc_binary(score_a, is_a);
            const auto b_vs_a = auc_binary(score_b, is_b);
            if (!a_vs_b || !b_vs_a) return std::nullopt;
            total += 0.5 * (*a_vs_b + *b_vs_a);
            ++pairs;
        }
    }
    return total / pairs;
}

MetricReport summarize(std::vector<double> per_fold) {
    MetricReport report;
    report.per_fold = std::move(per_fold);
    if (report.per_fold.empty()) return report;
    const double n = static_cast<double>(report.per_fold.size());
    report.mean = std::accumulate(report.per_fold.begin(), report.per_fold.end(), 0.0) / n;
    double ss = 0.0;
    for (double v : report.per_fold) ss += (v - report.mean) * (v - report.mean);
    report.stddev = std::sqrt(ss / n);
    return report;
}

} // namespace ggc
