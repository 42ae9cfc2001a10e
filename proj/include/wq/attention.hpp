#pragma once

// Single-head ProbSparse self-attention forward pass with a dense oracle.

#include <Eigen/Dense>

#include <string>
#include <vector>

namespace wq::attention {

struct AttentionInput {
    Eigen::MatrixXd queries;  // L_Q x d
    Eigen::MatrixXd keys;     // L_K x d
    Eigen::MatrixXd values;   // L_K x d_v
    /// Number of active queries, 1 <= u <= L_Q.
    Eigen::Index u = 1;
};

struct AttentionOutput {
    Eigen::MatrixXd output;   // L_Q x d_v
    Eigen::MatrixXd weights;  // L_Q x L_K
    /// Active query indices in ascending order.
    std::vector<Eigen::Index> active_queries;
};

/// M(q_i) = max_j(q_i . k_j / sqrt(d)) - mean_j(q_i . k_j / sqrt(d)).
Eigen::VectorXd query_sparsity_measure(const Eigen::MatrixXd& queries, const Eigen::MatrixXd& keys);

/// softmax(Q K^T / sqrt(d)) V with every query active.
AttentionOutput dense_attention(const Eigen::MatrixXd& queries, const Eigen::MatrixXd& keys,
                                const Eigen::MatrixXd& values);

/// Top-u queries by sparsity measure (ties to the lower index) get full
/// softmax rows; the remaining queries output mean(V) and record a uniform
/// weight row.
AttentionOutput probsparse_attention(const AttentionInput& input);

struct Heatmap {
    Eigen::MatrixXd weights;
    std::vector<std::string> query_labels;
    std::vector<std::string> key_labels;
};

/// CSV: first row "query\key" followed by key labels; each further row a
/// query label followed by its weights.
std::string heatmap_csv(const Heatmap& h);
Heatmap parse_heatmap_csv(const std::string& text);

/// Mean attention each key position receives across queries.
Eigen::VectorXd column_means(const Eigen::MatrixXd& weights);

/// Index range [first, last] of the contiguous run of columns whose mean
/// attention is at least `fraction` of the maximum, around the argmax.
std::pair<Eigen::Index, Eigen::Index> peak_columns(const Eigen::VectorXd& means, double fraction = 0.5);

/// Companion JSON: active_queries, column_means, peak range.
std::string heatmap_json(const AttentionOutput& out, int indent = 2);

}  // namespace wq::attention
