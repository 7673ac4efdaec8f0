#include "dermseg/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>
#include <stdexcept>

#include "dermseg/errors.hpp"
#include "dermseg/morphology.hpp"

namespace dermseg {

namespace {

struct Overlap {
    size_t intersection = 0;
    size_t a_count = 0;
    size_t b_count = 0;
};

Overlap overlap_counts(const BinaryMask& a, const BinaryMask& b) {
    if (a.width != b.width || a.height != b.height) {
        throw std::invalid_argument("mask dimensions do not match");
    }
    Overlap o;
    for (size_t i = 0; i < a.data.size(); ++i) {
        o.a_count += a.data[i];
        o.b_count += b.data[i];
        o.intersection += a.data[i] & b.data[i];
    }
    return o;
}

}  // namespace

double jaccard(const BinaryMask& a, const BinaryMask& b) {
    Overlap o = overlap_counts(a, b);
    size_t uni = o.a_count + o.b_count - o.intersection;
    if (uni == 0) return 1.0;
    return static_cast<double>(o.intersection) / static_cast<double>(uni);
}

double dice(const BinaryMask& a, const BinaryMask& b) {
    Overlap o = overlap_counts(a, b);
    if (o.a_count + o.b_count == 0) return 1.0;
    return 2.0 * static_cast<double>(o.intersection) /
           static_cast<double>(o.a_count + o.b_count);
}

double optimize_threshold(const std::vector<ProbMap>& probs,
                          const std::vector<BinaryMask>& truths) {
    if (probs.empty() || probs.size() != truths.size()) {
        throw std::invalid_argument("optimize_threshold: need matching non-empty lists");
    }
    double best_j = -1.0;
    int best_i = 0;
    for (int i = 1; i <= 99; ++i) {
        double tau = i / 100.0;
        double mean_j = 0.0;
        for (size_t s = 0; s < probs.size(); ++s) {
            BinaryMask m(probs[s].width, probs[s].height);
            for (size_t px = 0; px < m.data.size(); ++px) {
                m.data[px] = probs[s].data[px] > tau ? 1 : 0;
            }
            mean_j += jaccard(m, truths[s]);
        }
        mean_j /= static_cast<double>(probs.size());
        bool better = mean_j > best_j;
        if (!better && mean_j == best_j) {
            int dist = std::abs(i - 50), best_dist = std::abs(best_i - 50);
            better = dist < best_dist || (dist == best_dist && i < best_i);
        }
        if (better) {
            best_j = mean_j;
            best_i = i;
        }
    }
    return best_i / 100.0;
}

std::string algorithm_label(Algorithm alg) {
    switch (alg) {
        case Algorithm::k1A:
            return "1A";
        case Algorithm::k1B:
            return "1B";
        case Algorithm::kCluster:
            return "2";
    }
    return "?";
}

BinaryMask binarize_and_clean(const ProbMap& p, double tau, Algorithm alg) {
    double cut = alg == Algorithm::k1A ? 0.5 : tau;
    if (!(cut > 0.0 && cut < 1.0)) throw std::invalid_argument("binarize_and_clean: tau not in (0,1)");
    BinaryMask m(p.width, p.height);
    for (size_t i = 0; i < m.data.size(); ++i) m.data[i] = p.data[i] > cut ? 1 : 0;
    if (alg == Algorithm::k1B) m = fill_holes(m);
    return m;
}

EvalRow evaluate_fold(int fold_number, Algorithm alg,
                      const std::vector<std::optional<BinaryMask>>& predictions,
                      const std::vector<BinaryMask>& truths,
                      const std::vector<std::string>& ids) {
    if (predictions.size() != truths.size() || predictions.size() != ids.size() ||
        predictions.empty()) {
        throw std::invalid_argument("evaluate_fold: list sizes do not match");
    }
    double j_sum = 0.0, d_sum = 0.0;
    for (size_t i = 0; i < predictions.size(); ++i) {
        if (!predictions[i]) {
            throw IoError("evaluate_fold: missing prediction for sample " + ids[i]);
        }
        j_sum += jaccard(*predictions[i], truths[i]);
        d_sum += dice(*predictions[i], truths[i]);
    }
    EvalRow row;
    row.fold = fold_number;
    row.algorithm = alg;
    row.jaccard = j_sum / static_cast<double>(predictions.size());
    row.dice = d_sum / static_cast<double>(predictions.size());
    return row;
}

ReportTable emit_report(const std::vector<EvalRow>& rows) {
    ReportTable table;
    table.rows = rows;
    std::map<Algorithm, std::vector<const EvalRow*>> by_alg;
    for (const EvalRow& row : table.rows) {
        if (row.fold != kFullDataset) by_alg[row.algorithm].push_back(&row);
    }
    for (auto& [alg, fold_rows] : by_alg) {
        AlgorithmSummary s;
        s.algorithm = alg;
        double n = static_cast<double>(fold_rows.size());
        for (const EvalRow* r : fold_rows) {
            s.mean_jaccard += r->jaccard;
            s.mean_dice += r->dice;
        }
        s.mean_jaccard /= n;
        s.mean_dice /= n;
        for (const EvalRow* r : fold_rows) {
            s.sigma_jaccard += (r->jaccard - s.mean_jaccard) * (r->jaccard - s.mean_jaccard);
            s.sigma_dice += (r->dice - s.mean_dice) * (r->dice - s.mean_dice);
        }
        s.sigma_jaccard = std::sqrt(s.sigma_jaccard / n);
        s.sigma_dice = std::sqrt(s.sigma_dice / n);
        table.summaries.push_back(s);
    }
    return table;
}

namespace {

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6f", v);
    return buf;
}

std::string fmt2(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", v);
    return buf;
}

std::string fold_name(int fold) { return fold == kFullDataset ? "full" : std::to_string(fold); }

}  // namespace

std::string report_csv(const ReportTable& table) {
    std::ostringstream out;
    out << "fold,algorithm,jaccard,dice\n";
    for (const EvalRow& row : table.rows) {
        out << fold_name(row.fold) << "," << algorithm_label(row.algorithm) << ","
            << fmt(row.jaccard) << "," << fmt(row.dice) << "\n";
    }
    for (const AlgorithmSummary& s : table.summaries) {
        out << "m," << algorithm_label(s.algorithm) << "," << fmt(s.mean_jaccard) << ","
            << fmt(s.mean_dice) << "\n";
        out << "sigma," << algorithm_label(s.algorithm) << "," << fmt(s.sigma_jaccard) << ","
            << fmt(s.sigma_dice) << "\n";
    }
    return out.str();
}

std::string report_text(const ReportTable& table) {
    std::vector<Algorithm> algs;
    for (const AlgorithmSummary& s : table.summaries) algs.push_back(s.algorithm);
    std::vector<int> folds;
    for (const EvalRow& row : table.rows) {
        if (std::find(folds.begin(), folds.end(), row.fold) == folds.end()) {
            folds.push_back(row.fold);
        }
    }
    std::sort(folds.begin(), folds.end());

    auto cell = [&](int fold, Algorithm alg) -> std::string {
        for (const EvalRow& row : table.rows) {
            if (row.fold == fold && row.algorithm == alg) {
                return fmt2(row.jaccard) + " (" + fmt2(row.dice) + ")";
            }
        }
        return "-";
    };

    std::ostringstream out;
    out << "Fold";
    for (Algorithm alg : algs) out << "\tAlgorithm " << algorithm_label(alg);
    out << "\n";
    for (int fold : folds) {
        out << fold_name(fold);
        for (Algorithm alg : algs) out << "\t" << cell(fold, alg);
        out << "\n";
    }
    out << "m";
    for (const AlgorithmSummary& s : table.summaries) {
        out << "\t" << fmt2(s.mean_jaccard) << " (" << fmt2(s.mean_dice) << ")";
    }
    out << "\nsigma";
    for (const AlgorithmSummary& s : table.summaries) {
        out << "\t" << fmt2(s.sigma_jaccard) << " (" << fmt2(s.sigma_dice) << ")";
    }
    out << "\n";
    return out.str();
}

}  // namespace dermseg
