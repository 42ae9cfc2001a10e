#include "wq/attention.hpp"

#include "csv.hpp"
#include "wq/error.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace wq::attention {

namespace {

void check_shapes(const Eigen::MatrixXd& q, const Eigen::MatrixXd& k) {
    if (q.cols() == 0) throw ShapeError("attention dimension d must be positive");
    if (q.cols() != k.cols())
        throw ShapeError("queries and keys differ in width (" + std::to_string(q.cols()) + " vs " +
                         std::to_string(k.cols()) + ")");
    if (k.rows() == 0) throw ShapeError("attention needs at least one key");
    if (!q.allFinite() || !k.allFinite()) throw ShapeError("attention inputs must be finite");
}

void check_values(const Eigen::MatrixXd& k, const Eigen::MatrixXd& v) {
    if (k.rows() != v.rows())
        throw ShapeError("keys and values differ in length (" + std::to_string(k.rows()) + " vs " +
                         std::to_string(v.rows()) + ")");
    if (!v.allFinite()) throw ShapeError("attention inputs must be finite");
}

Eigen::MatrixXd scaled_logits(const Eigen::MatrixXd& q, const Eigen::MatrixXd& k) {
    return (q * k.transpose()) / std::sqrt(static_cast<double>(q.cols()));
}

Eigen::RowVectorXd softmax(const Eigen::RowVectorXd& logits) {
    Eigen::RowVectorXd e = (logits.array() - logits.maxCoeff()).exp();
    return e / e.sum();
}

}  // namespace

Eigen::VectorXd query_sparsity_measure(const Eigen::MatrixXd& queries, const Eigen::MatrixXd& keys) {
    check_shapes(queries, keys);
    Eigen::MatrixXd s = scaled_logits(queries, keys);
    return s.rowwise().maxCoeff() - s.rowwise().mean();
}

AttentionOutput dense_attention(const Eigen::MatrixXd& queries, const Eigen::MatrixXd& keys,
                                const Eigen::MatrixXd& values) {
    check_shapes(queries, keys);
    check_values(keys, values);
    Eigen::MatrixXd logits = scaled_logits(queries, keys);
    AttentionOutput out;
    out.weights.resize(queries.rows(), keys.rows());
    for (Eigen::Index i = 0; i < queries.rows(); ++i) out.weights.row(i) = softmax(logits.row(i));
    out.output = out.weights * values;
    out.active_queries.resize(static_cast<std::size_t>(queries.rows()));
    std::iota(out.active_queries.begin(), out.active_queries.end(), Eigen::Index{0});
    return out;
}

AttentionOutput probsparse_attention(const AttentionInput& in) {
    check_shapes(in.queries, in.keys);
    check_values(in.keys, in.values);
    const Eigen::Index lq = in.queries.rows(), lk = in.keys.rows();
    if (in.u < 1 || in.u > lq)
        throw ParameterError("u=" + std::to_string(in.u) + " must lie in [1, " + std::to_string(lq) + "]");

    Eigen::MatrixXd logits = scaled_logits(in.queries, in.keys);
    Eigen::VectorXd score = logits.rowwise().maxCoeff() - logits.rowwise().mean();
    std::vector<Eigen::Index> order(static_cast<std::size_t>(lq));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) { return score(a) > score(b); });

    AttentionOutput out;
    out.active_queries.assign(order.begin(), order.begin() + in.u);
    std::sort(out.active_queries.begin(), out.active_queries.end());

    const Eigen::RowVectorXd mean_v = in.values.colwise().mean();
    out.weights = Eigen::MatrixXd::Constant(lq, lk, 1.0 / static_cast<double>(lk));
    out.output = mean_v.replicate(lq, 1);
    for (auto i : out.active_queries) {
        out.weights.row(i) = softmax(logits.row(i));
        out.output.row(i) = out.weights.row(i) * in.values;
    }
    return out;
}

std::string heatmap_csv(const Heatmap& h) {
    const auto rows = h.weights.rows(), cols = h.weights.cols();
    if (static_cast<Eigen::Index>(h.query_labels.size()) != rows || static_cast<Eigen::Index>(h.key_labels.size()) != cols)
        throw ShapeError("heatmap labels do not match the weight matrix");
    std::string out = "query\\key";
    for (const auto& k : h.key_labels) out += "," + k;
    out += '\n';
    for (Eigen::Index i = 0; i < rows; ++i) {
        out += h.query_labels[static_cast<std::size_t>(i)];
        for (Eigen::Index j = 0; j < cols; ++j) out += "," + detail::format_double(h.weights(i, j));
        out += '\n';
    }
    return out;
}

Heatmap parse_heatmap_csv(const std::string& text) {
    detail::LineReader reader(text);
    std::string_view line;
    if (!reader.next(line)) throw DataError("heatmap CSV is empty");
    auto header = detail::split_row(line, ',');
    Heatmap h;
    h.key_labels.assign(header.begin() + 1, header.end());
    std::vector<std::vector<double>> rows;
    while (reader.next(line)) {
        if (line.empty()) continue;
        auto cells = detail::split_row(line, ',');
        if (cells.size() != header.size()) throw DataError("heatmap row has the wrong number of cells");
        h.query_labels.push_back(cells[0]);
        std::vector<double> r;
        for (std::size_t j = 1; j < cells.size(); ++j) {
            auto v = detail::parse_double(cells[j]);
            if (!v) throw DataError("heatmap cell is not a number: '" + cells[j] + "'");
            r.push_back(*v);
        }
        rows.push_back(std::move(r));
    }
    h.weights.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(h.key_labels.size()));
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < rows[i].size(); ++j)
            h.weights(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    return h;
}

Eigen::VectorXd column_means(const Eigen::MatrixXd& weights) {
    if (weights.rows() == 0) return Eigen::VectorXd::Zero(weights.cols());
    return weights.colwise().mean().transpose();
}

std::pair<Eigen::Index, Eigen::Index> peak_columns(const Eigen::VectorXd& means, double fraction) {
    if (means.size() == 0) throw ShapeError("no columns");
    Eigen::Index arg;
    double peak = means.maxCoeff(&arg);
    double cut = fraction * peak;
    Eigen::Index lo = arg, hi = arg;
    while (lo > 0 && means(lo - 1) >= cut) --lo;
    while (hi + 1 < means.size() && means(hi + 1) >= cut) ++hi;
    return {lo, hi};
}

std::string heatmap_json(const AttentionOutput& out, int indent) {
    nlohmann::json j;
    j["active_queries"] = out.active_queries;
    auto means = column_means(out.weights);
    j["column_means"] = std::vector<double>(means.data(), means.data() + means.size());
    auto [lo, hi] = peak_columns(means);
    j["peak_columns"] = {lo, hi};
    j["shape"] = {out.weights.rows(), out.weights.cols()};
    return j.dump(indent);
}

}  // namespace wq::attention
