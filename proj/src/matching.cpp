#include "avex/matching.hpp"

#include <algorithm>
#include <stdexcept>

#include "avex/kernels.hpp"

namespace avex {

PoolMode parse_pool_mode(const std::string& s) {
    if (s == "max") return PoolMode::kMax;
    if (s == "mean") return PoolMode::kMean;
    throw std::runtime_error("unknown pooling mode '" + s + "' (expected max|mean)");
}

Variant parse_variant(const std::string& s) {
    if (s == "full") return Variant::kFull;
    if (s == "no_ns") return Variant::kNoNs;
    if (s == "no_prior") return Variant::kNoPrior;
    if (s == "bce_only") return Variant::kBceOnly;
    throw std::runtime_error("unknown variant '" + s + "' (expected full|no_ns|no_prior|bce_only)");
}

std::string to_string(PoolMode m) { return m == PoolMode::kMax ? "max" : "mean"; }

std::string to_string(Variant v) {
    switch (v) {
        case Variant::kFull: return "full";
        case Variant::kNoNs: return "no_ns";
        case Variant::kNoPrior: return "no_prior";
        case Variant::kBceOnly: return "bce_only";
    }
    return "?";
}

LossCoeffs loss_coeffs(Variant v, double f) {
    if (f < 0.0 || f > 1.0) throw std::runtime_error("loss weight F must be in [0,1], got " + std::to_string(f));
    LossCoeffs c;
    switch (v) {
        case Variant::kFull:
            c = {1.0, 1.0 - f, 1.0 - f, f, true, true};
            break;
        case Variant::kNoNs:
            c = {1.0, 1.0 - f, 0.0, f, false, true};
            break;
        case Variant::kNoPrior:
            c = {1.0, 1.0, 1.0, 0.0, true, false};
            break;
        case Variant::kBceOnly:
            c = {1.0, 0.0, 0.0, 0.0, false, false};
            break;
    }
    return c;
}

double total_loss(double l_bce, double l_sm, double l_ns, double l_pr, Variant v, double f) {
    const LossCoeffs c = loss_coeffs(v, f);
    return c.bce * l_bce + c.sm * l_sm + c.ns * l_ns + c.pr * l_pr;
}

void label_selector(const Array2& h_labels, std::span<const int> gold_labels, Array2& out) {
    if (gold_labels.empty()) throw std::invalid_argument("label_selector: empty gold set");
    out.resize(static_cast<int>(gold_labels.size()), h_labels.cols);
    for (size_t i = 0; i < gold_labels.size(); ++i) {
        const int id = gold_labels[i];
        if (id < 0 || id >= h_labels.rows) throw std::out_of_range("label_selector: label_id out of range");
        const double* src = h_labels.row(id);
        double* dst = out.row(static_cast<int>(i));
        for (int c = 0; c < h_labels.cols; ++c) dst[c] = src[c];
    }
}

void combine_gold_labels(const Array2& l_gt, PoolMode mode, Vec& out, std::vector<int>& argmax) {
    if (mode == PoolMode::kMax) {
        kernels::max_pool_rows(l_gt, out, argmax);
    } else {
        kernels::mean_pool_rows(l_gt, l_gt.rows, out);
        argmax.clear();
    }
}

void combine_gold_labels_backward(const Vec& dout, PoolMode mode, int m_rows, const std::vector<int>& argmax,
                                  Array2& dl_gt) {
    if (mode == PoolMode::kMax) {
        kernels::max_pool_backward(dout, argmax, dl_gt);
    } else {
        kernels::mean_pool_backward(dout, m_rows, dl_gt);
    }
}

double semantic_match_loss(std::span<const double> similarities) {
    if (similarities.empty()) throw std::invalid_argument("semantic_match_loss: empty batch");
    double s = 0.0;
    for (double x : similarities) s += x;
    return -s / static_cast<double>(similarities.size());
}

double negative_sample_loss(std::span<const double> similarities) {
    if (similarities.empty()) throw std::invalid_argument("negative_sample_loss: empty batch");
    double s = 0.0;
    for (double x : similarities) s += x;
    return s / static_cast<double>(similarities.size());
}

std::map<int, std::vector<int>> group_gold_by_attribute(const AttributeSchema& schema,
                                                        std::span<const int> gold_labels) {
    std::map<int, std::vector<int>> by_attr;
    for (int id : gold_labels) by_attr[schema.label(id).attr_id].push_back(id);
    return by_attr;
}

NegSampleResult sample_negative_labels(const std::map<int, std::vector<int>>& a2l,
                                       const std::map<int, std::vector<int>>& gold_by_attribute, Rng& rng) {
    NegSampleResult res;
    for (const auto& [attr, gold] : gold_by_attribute) {
        auto it = a2l.find(attr);
        if (it == a2l.end()) throw std::runtime_error("sample_negative_labels: attribute " + std::to_string(attr) + " not in A2L");
        std::vector<int> candidates;
        candidates.reserve(it->second.size());
        for (int id : it->second) {
            if (std::find(gold.begin(), gold.end(), id) == gold.end()) candidates.push_back(id);
        }
        int neg_num = static_cast<int>(gold.size());
        if (static_cast<int>(candidates.size()) < neg_num) neg_num = static_cast<int>(candidates.size());
        rng.partial_shuffle(candidates, neg_num);
        res.per_attribute_counts[attr] = neg_num;
        res.neg_label_ids.insert(res.neg_label_ids.end(), candidates.begin(), candidates.begin() + neg_num);
    }
    std::sort(res.neg_label_ids.begin(), res.neg_label_ids.end());
    return res;
}

double label_prior_loss(const Array2& h_labels) {
    const int n = h_labels.rows;
    const int d = h_labels.cols;
    if (n < 2) throw std::invalid_argument("label_prior_loss: need N >= 2 label rows");
    double acc = 0.0;
    for (int c = 0; c < d; ++c) {
        double mean = 0.0;
        for (int r = 0; r < n; ++r) mean += h_labels.at(r, c);
        mean /= n;
        double var = 0.0;
        for (int r = 0; r < n; ++r) {
            const double dev = h_labels.at(r, c) - mean;
            var += dev * dev;
        }
        var /= n;
        acc += mean * mean + (var - 1.0) * (var - 1.0);
    }
    return acc / d;
}

void label_prior_backward(const Array2& h_labels, double dloss, Array2& dh_labels) {
    const int n = h_labels.rows;
    const int d = h_labels.cols;
    for (int c = 0; c < d; ++c) {
        double mean = 0.0;
        for (int r = 0; r < n; ++r) mean += h_labels.at(r, c);
        mean /= n;
        double var = 0.0;
        for (int r = 0; r < n; ++r) {
            const double dev = h_labels.at(r, c) - mean;
            var += dev * dev;
        }
        var /= n;
        // d/dx_r [mu^2] = 2 mu / n;  d/dx_r [(var-1)^2] = 2(var-1) * 2(x_r - mu)/n
        const double g_mean = 2.0 * mean / n;
        const double g_var = 4.0 * (var - 1.0) / n;
        const double scale = dloss / d;
        for (int r = 0; r < n; ++r) {
            dh_labels.at(r, c) += scale * (g_mean + g_var * (h_labels.at(r, c) - mean));
        }
    }
}

}  // namespace avex
