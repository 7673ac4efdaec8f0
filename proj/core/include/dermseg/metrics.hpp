#pragma once

#include <optional>
#include <string>
#include <vector>

#include "dermseg/image.hpp"

namespace dermseg {

// Lesion-class probability per pixel, values in [0,1].
using ProbMap = Plane;

// |a n b| / |a u b|; two empty masks score 1.
double jaccard(const BinaryMask& a, const BinaryMask& b);

// 2|a n b| / (|a| + |b|); two empty masks score 1. Equals 2J/(1+J).
double dice(const BinaryMask& a, const BinaryMask& b);

// Exhaustive grid tau in {0.01,...,0.99} maximizing mean Jaccard of
// (prob > tau) against truth. Mean Jaccard is piecewise constant in tau, so
// the grid search solves the same problem the paper attacks with gradient
// descent. Ties prefer the tau nearest 0.5, then the smaller tau.
double optimize_threshold(const std::vector<ProbMap>& probs,
                          const std::vector<BinaryMask>& truths);

enum class Algorithm { k1A, k1B, kCluster };

std::string algorithm_label(Algorithm alg);  // "1A", "1B", "2"

// 1A thresholds at a fixed 0.5 with no cleanup; 1B uses tau and fills holes.
BinaryMask binarize_and_clean(const ProbMap& p, double tau, Algorithm alg);

struct EvalRow {
    int fold = 0;  // 1-based; kFullDataset for the whole-set clustering row
    Algorithm algorithm = Algorithm::kCluster;
    double jaccard = 0.0;
    double dice = 0.0;
};

constexpr int kFullDataset = -1;

// Mean J/D over one fold's validation samples. A missing prediction is an
// error naming the sample id.
EvalRow evaluate_fold(int fold_number, Algorithm alg,
                      const std::vector<std::optional<BinaryMask>>& predictions,
                      const std::vector<BinaryMask>& truths,
                      const std::vector<std::string>& ids);

struct AlgorithmSummary {
    Algorithm algorithm;
    double mean_jaccard = 0.0;
    double sigma_jaccard = 0.0;  // population sigma over fold means
    double mean_dice = 0.0;
    double sigma_dice = 0.0;
};

struct ReportTable {
    std::vector<EvalRow> rows;
    std::vector<AlgorithmSummary> summaries;
};

// Summaries cover the per-fold rows only; the full-dataset row is carried
// through but excluded from m and sigma.
ReportTable emit_report(const std::vector<EvalRow>& rows);

// CSV columns fold,algorithm,jaccard,dice with summary folds "m" and "sigma".
std::string report_csv(const ReportTable& table);

// Aligned text, one "J (D)" column per algorithm.
std::string report_text(const ReportTable& table);

}  // namespace dermseg
