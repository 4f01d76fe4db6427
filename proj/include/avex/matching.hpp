// Semantic matching loss, negative label sampling, label prior matching, and
// the composite objective L = L_bce + (1-F)(L_sm + L_ns) + F*L_pr.
#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include "avex/array.hpp"
#include "avex/rng.hpp"
#include "avex/schema.hpp"

namespace avex {

enum class PoolMode { kMax, kMean };
enum class Variant {
    kFull,     // bce + semantic matching + negative sampling + prior
    kNoNs,     // negative label sampling removed
    kNoPrior,  // F forced to 0: prior dropped, matching at full weight
    kBceOnly,  // plain classifier, all matching losses off
};

PoolMode parse_pool_mode(const std::string& s);
Variant parse_variant(const std::string& s);
std::string to_string(PoolMode m);
std::string to_string(Variant v);

struct LossBundle {
    double l_bce = 0.0;
    double l_sm = 0.0;
    double l_ns = 0.0;
    double l_pr = 0.0;
    double f_weight = 0.0;
    double total = 0.0;
};

// Per-part coefficients of the composite loss under a variant.
struct LossCoeffs {
    double bce = 1.0, sm = 0.0, ns = 0.0, pr = 0.0;
    bool use_negative_sampling = false;
    bool use_prior = false;
};

LossCoeffs loss_coeffs(Variant v, double f);  // throws if f outside [0,1]

// Recombine parts per variant; the Eq.-of-record for tests and training alike.
double total_loss(double l_bce, double l_sm, double l_ns, double l_pr, Variant v, double f);

// stacks H_L rows for the gold ids (ascending label_id order)
void label_selector(const Array2& h_labels, std::span<const int> gold_labels, Array2& out);

// combined gold representation L_cr: element-wise max (default) or mean
void combine_gold_labels(const Array2& l_gt, PoolMode mode, Vec& out, std::vector<int>& argmax);
// routes dL_cr back onto the selected rows
void combine_gold_labels_backward(const Vec& dout, PoolMode mode, int m_rows, const std::vector<int>& argmax,
                                  Array2& dl_gt);

// L_sm = -(1/P) sum_i cos(T_p_i, L_cr_i)
double semantic_match_loss(std::span<const double> similarities);
// L_ns = +(1/P) sum_i cos(T_p_i, L_cr-neg_i); items with no negatives contribute 0
double negative_sample_loss(std::span<const double> similarities);

struct NegSampleResult {
    std::vector<int> neg_label_ids;           // sorted, distinct, disjoint from gold
    std::map<int, int> per_attribute_counts;  // attr_id -> sampled count
};

// gold ids of one product grouped by their attribute (the AN / L_gtIDs^AN input)
std::map<int, std::vector<int>> group_gold_by_attribute(const AttributeSchema& schema,
                                                        std::span<const int> gold_labels);

// Per gold attribute A: candidates = a2l[A] minus gold; draw
// min(|gold in A|, |candidates|) of them uniformly without replacement.
NegSampleResult sample_negative_labels(const std::map<int, std::vector<int>>& a2l,
                                       const std::map<int, std::vector<int>>& gold_by_attribute, Rng& rng);

// Moment-matching surrogate of label prior matching:
// L_pr = (1/d) sum_dim (mu^2 + (var - 1)^2), moments across the N label rows.
double label_prior_loss(const Array2& h_labels);
void label_prior_backward(const Array2& h_labels, double dloss, Array2& dh_labels);

}  // namespace avex
