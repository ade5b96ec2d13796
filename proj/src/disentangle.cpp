#include "varsplit/disentangle.hpp"

#include "varsplit/csv.hpp"

#include <ostream>
#include <stdexcept>

namespace varsplit {

PointDecomposition decompose_with_mean(std::span<const GaussianPrediction> preds) {
    if (preds.empty()) throw std::invalid_argument("decompose: prediction set is empty");
    const double inv_s = 1.0 / static_cast<double>(preds.size());
    // Means are accumulated relative to the first sample so that identical
    // predictions give mu_bar == mu exactly and EU == 0 exactly.
    const double pivot = preds.front().mu;
    double shift_sum = 0.0;
    double var_sum = 0.0;
    for (const auto& p : preds) {
        if (!(p.sigma2 > 0.0)) throw std::invalid_argument("decompose: every sigma2 must be positive");
        shift_sum += p.mu - pivot;
        var_sum += p.sigma2;
    }
    const double shift_mean = shift_sum * inv_s;
    const double mu_bar = pivot + shift_mean;
    double spread = 0.0;
    for (const auto& p : preds) {
        const double d = (p.mu - pivot) - shift_mean;
        spread += d * d;
    }
    PointDecomposition out;
    out.mu_bar = mu_bar;
    out.u.au = var_sum * inv_s;
    out.u.eu = spread * inv_s;
    out.u.tu = out.u.au + out.u.eu;
    return out;
}

UncertaintyEstimate decompose(std::span<const GaussianPrediction> preds) { return decompose_with_mean(preds).u; }

std::vector<PointDecomposition> decompose_batch(const FittedPosterior& fp, const Matrix& inputs, std::size_t samples,
                                                std::uint64_t seed) {
    if (inputs.empty()) throw std::invalid_argument("decompose_batch: no input rows");
    if (fp.members.empty()) throw std::invalid_argument("decompose_batch: posterior has no networks");
    const auto thetas = draw_parameters(fp, samples, seed);
    const TwoHeadNetwork& shape = fp.members.front();
    std::vector<PointDecomposition> out;
    out.reserve(inputs.rows());
    std::vector<GaussianPrediction> preds(thetas.size());
    ForwardTape tape;
    for (std::size_t r = 0; r < inputs.rows(); ++r) {
        for (std::size_t s = 0; s < thetas.size(); ++s) preds[s] = forward_with(shape, thetas[s], inputs.row(r), &tape);
        out.push_back(decompose_with_mean(preds));
    }
    return out;
}

void write_decomposition_csv(std::ostream& os, const Matrix& inputs, const std::vector<std::string>& input_names,
                             std::span<const PointDecomposition> rows) {
    if (inputs.rows() != rows.size()) throw std::invalid_argument("decomposition csv: row count mismatch");
    if (input_names.size() != inputs.cols()) throw std::invalid_argument("decomposition csv: column name mismatch");
    std::vector<std::string> header = input_names;
    for (const char* c : {"mu_bar", "au", "eu", "tu"}) header.emplace_back(c);
    os << csv::join(header) << '\n';
    for (std::size_t r = 0; r < rows.size(); ++r) {
        std::vector<std::string> f;
        for (double v : inputs.row(r)) f.push_back(csv::format(v));
        f.push_back(csv::format(rows[r].mu_bar));
        f.push_back(csv::format(rows[r].u.au));
        f.push_back(csv::format(rows[r].u.eu));
        f.push_back(csv::format(rows[r].u.tu));
        os << csv::join(f) << '\n';
    }
}

} // namespace varsplit
