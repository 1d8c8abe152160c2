#include "polymart/polymodel.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <stdexcept>
#include <thread>

namespace polymart {

// ---------------------------------------------------------------------------
// Index sets and tensors

std::vector<IndexTuple> enumerate_indices(int d, int n, std::optional<int> last_fixed) {
    if (d < 1) throw std::invalid_argument("enumerate_indices: d must be >= 1");
    if (d > n) throw std::invalid_argument("enumerate_indices: d exceeds n");
    if (last_fixed && (*last_fixed < d || *last_fixed > n))
        throw std::invalid_argument("enumerate_indices: fixed last index out of range");
    const int top = last_fixed ? *last_fixed : n;
    std::vector<IndexTuple> out;
    IndexTuple t(d);
    for (int k = 0; k < d; ++k) t[k] = k + 1;
    while (true) {
        if (!last_fixed || t.back() == *last_fixed) out.push_back(t);
        int k = d - 1;
        while (k >= 0 && t[k] == top - (d - 1 - k)) --k;
        if (k < 0) break;
        ++t[k];
        for (int j = k + 1; j < d; ++j) t[j] = t[j - 1] + 1;
    }
    return out;
}

std::uint64_t binomial(int n, int k) {
    if (k < 0 || k > n) return 0;
    k = std::min(k, n - k);
    std::uint64_t c = 1;
    for (int i = 1; i <= k; ++i) c = c * static_cast<std::uint64_t>(n - k + i) / static_cast<std::uint64_t>(i);
    return c;
}

CoefficientTensor::CoefficientTensor(int d, int n) : d_(d), n_(n) {
    if (d < 1 || n < d) throw std::invalid_argument("coefficient tensor requires 1 <= d <= n");
}

void CoefficientTensor::check(const IndexTuple& index) const {
    if (static_cast<int>(index.size()) != d_) throw std::invalid_argument("index tuple has the wrong length");
    for (int k = 0; k < d_; ++k) {
        if (index[k] < 1 || index[k] > n_) throw std::invalid_argument("index out of range");
        if (k > 0 && index[k] <= index[k - 1]) throw std::invalid_argument("index tuple must be strictly increasing");
    }
}

CoefficientTensor CoefficientTensor::uniform(int d, int n) {
    CoefficientTensor b(d, n);
    const auto tuples = enumerate_indices(d, n);
    const double v = 1.0 / std::sqrt(static_cast<double>(tuples.size()));
    for (const auto& t : tuples) b.entries_.emplace(t, v);
    return b;
}

CoefficientTensor CoefficientTensor::single(int d, int n, const IndexTuple& index, double value) {
    CoefficientTensor b(d, n);
    b.set(index, value);
    return b;
}

CoefficientTensor CoefficientTensor::random_unit(int d, int n, std::uint64_t seed, std::uint64_t stream) {
    CoefficientTensor b(d, n);
    const auto tuples = enumerate_indices(d, n);
    Philox4x32 rng(seed ^ 0x5bd1e995u);
    double ss = 0.0;
    std::vector<double> vals(tuples.size());
    for (std::size_t k = 0; k < tuples.size(); ++k) {
        const auto u = rng.uniforms(stream, k);
        vals[k] = std::sqrt(-2.0 * std::log(u[0])) * std::cos(2.0 * M_PI * u[1]);
        ss += vals[k] * vals[k];
    }
    const double norm = std::sqrt(ss);
    for (std::size_t k = 0; k < tuples.size(); ++k) b.entries_.emplace(tuples[k], vals[k] / norm);
    return b;
}

void CoefficientTensor::set(const IndexTuple& index, double value) {
    check(index);
    if (!std::isfinite(value)) throw std::invalid_argument("coefficient must be finite");
    if (value == 0.0) entries_.erase(index);
    else entries_[index] = value;
}

double CoefficientTensor::get(const IndexTuple& index) const {
    auto it = entries_.find(index);
    return it == entries_.end() ? 0.0 : it->second;
}

double CoefficientTensor::sum_squares() const {
    double s = 0.0;
    for (const auto& [k, v] : entries_) s += v * v;
    return s;
}

bool CoefficientTensor::is_normalized(double tol) const { return std::abs(sum_squares() - 1.0) <= tol; }

CoefficientTensor CoefficientTensor::normalized() const {
    const double s = sum_squares();
    if (!(s > 0.0)) throw std::domain_error("cannot normalize an empty tensor");
    return scaled(1.0 / std::sqrt(s));
}

CoefficientTensor CoefficientTensor::scaled(double factor) const {
    CoefficientTensor b(d_, n_);
    for (const auto& [k, v] : entries_)
        if (v * factor != 0.0) b.entries_.emplace(k, v * factor);
    return b;
}

CoefficientTensor CoefficientTensor::restrict_window(int lo, int hi) const {
    CoefficientTensor b(d_, n_);
    for (const auto& [k, v] : entries_)
        if (k.front() >= lo && k.back() <= hi) b.entries_.emplace(k, v);
    return b;
}

std::optional<double> CoefficientTensor::constant_full_value() const {
    if (entries_.empty() || entries_.size() != binomial(n_, d_)) return std::nullopt;
    const double v = entries_.begin()->second;
    for (const auto& [k, w] : entries_)
        if (w != v) return std::nullopt;
    return v;
}

double variance_of_Q(const CoefficientTensor& b, const std::vector<std::vector<double>>& sigma) {
    double total = 0.0;
    for (const auto& [index, v] : b.entries()) {
        double term = v * v;
        for (int m = 0; m < b.d(); ++m) {
            const int i = index[m];
            if (i > static_cast<int>(sigma.size()) || m >= static_cast<int>(sigma[i - 1].size()))
                throw std::invalid_argument("variance_of_Q: missing sigma entry");
            const double s = sigma[i - 1][m];
            if (!(s > 0.0) || !std::isfinite(s)) throw std::invalid_argument("variance_of_Q: sigma must be positive");
            term *= s * s;
        }
        total += term;
    }
    return total;
}

// ---------------------------------------------------------------------------
// Models

std::string sharing_name(Sharing s) {
    switch (s) {
        case Sharing::Independent: return "independent";
        case Sharing::Coincident: return "coincident";
        case Sharing::Diagonal: return "diagonal";
    }
    return "independent";
}

Sharing parse_sharing(const std::string& s) {
    if (s == "independent") return Sharing::Independent;
    if (s == "coincident") return Sharing::Coincident;
    if (s == "diagonal") return Sharing::Diagonal;
    throw std::invalid_argument("unknown sharing mode '" + s + "'");
}

void PolynomialModel::validate() const {
    if (d < 1 || n < d) throw std::invalid_argument("model requires 1 <= d <= n");
    if (coefficients.d() != d || coefficients.n() != n)
        throw std::invalid_argument("coefficient tensor dimensions do not match the model");
    if (static_cast<int>(factors.size()) != d) throw std::invalid_argument("model needs one input law per factor");
    if (!(modulator_strength >= 0.0 && modulator_strength < 1.0))
        throw std::invalid_argument("modulator strength must lie in [0, 1)");
    switch (regime.tag) {
        case Regime::CommonIndependent:
            if (sharing != Sharing::Independent || modulator)
                throw std::invalid_argument("common-independent models need independent cells and no modulator");
            break;
        case Regime::InsideIndependent:
            if (modulator) throw std::invalid_argument("inside-independent models cannot use the modulator");
            break;
        case Regime::VectorIndependent:
            if (sharing == Sharing::Diagonal || modulator)
                throw std::invalid_argument("vector-independent models need independent vectors and no modulator");
            break;
        case Regime::Martingale: break;
    }
    if (sharing == Sharing::Coincident && modulator)
        throw std::invalid_argument("the modulator is not supported with coincident sharing");
}

CellSampler::CellSampler(const PolynomialModel& model, std::uint64_t seed) : model_(model), rng_(seed) {
    model_.validate();
}

void apply_modulator(std::vector<double>& cells, int n, int d, double strength) {
    double sign_sum = 0.0;
    for (int i = 0; i < n; ++i) {
        const double w = i == 0 ? 1.0 : 1.0 + strength * sign_sum / static_cast<double>(i * d);
        for (int m = 0; m < d; ++m) {
            double& c = cells[static_cast<std::size_t>(i * d + m)];
            sign_sum += c > 0.0 ? 1.0 : (c < 0.0 ? -1.0 : 0.0);
            c *= w;
        }
    }
}

void CellSampler::fill(std::uint64_t replication, std::vector<double>& cells) const {
    const int n = model_.n, d = model_.d;
    cells.resize(static_cast<std::size_t>(n * d));
    const std::uint64_t cell_count = static_cast<std::uint64_t>(n * d);
    for (int i = 0; i < n; ++i) {
        for (int m = 0; m < d; ++m) {
            const std::uint64_t id = static_cast<std::uint64_t>(i * d + m);
            double v = 0.0;
            switch (model_.sharing) {
                case Sharing::Independent: {
                    const auto u = rng_.uniforms(replication, id);
                    v = model_.factors[m].transform(u[0], u[1]);
                    break;
                }
                case Sharing::Coincident: {
                    const auto u = rng_.uniforms(replication, static_cast<std::uint64_t>(i * d));
                    v = model_.factors[m].transform(u[0], u[1]);
                    break;
                }
                case Sharing::Diagonal: {
                    // Base draw j = i - m (0-based) ranges over 1 - d .. n - 1.
                    const std::uint64_t base_id = cell_count + static_cast<std::uint64_t>(i - m + d);
                    const auto u = rng_.uniforms(replication, base_id);
                    const auto s = rng_.uniforms(replication, id);
                    v = model_.factors[m].transform(u[0], u[1]);
                    if (s[0] < 0.5) v = -v;
                    break;
                }
            }
            cells[static_cast<std::size_t>(i * d + m)] = v;
        }
    }
    if (model_.modulator) apply_modulator(cells, n, d, model_.modulator_strength);
}

// ---------------------------------------------------------------------------
// Evaluation

TensorEvaluator::TensorEvaluator(const CoefficientTensor& b) : d_(b.d()), n_(b.n()) {
    if (auto v = b.constant_full_value()) {
        uniform_ = true;
        value_ = *v;
        return;
    }
    for (const auto& [index, v] : b.entries()) {
        for (int m = 0; m < d_; ++m) offsets_.push_back(static_cast<std::uint32_t>((index[m] - 1) * d_ + m));
        coefs_.push_back(v);
        last_.push_back(index.back());
    }
}

double TensorEvaluator::operator()(const std::vector<double>& cells) const {
    if (uniform_) {
        double s[16] = {};
        std::vector<double> big;
        double* S = s;
        if (d_ > 16) {
            big.assign(static_cast<std::size_t>(d_), 0.0);
            S = big.data();
        }
        for (int i = 0; i < n_; ++i) {
            const double* row = &cells[static_cast<std::size_t>(i * d_)];
            for (int m = std::min(d_ - 1, i); m >= 1; --m) S[m] += row[m] * S[m - 1];
            S[0] += row[0];
        }
        return value_ * S[d_ - 1];
    }
    double q = 0.0;
    const std::size_t entries = coefs_.size();
    const std::uint32_t* off = offsets_.data();
    for (std::size_t e = 0; e < entries; ++e) {
        double t = coefs_[e];
        for (int m = 0; m < d_; ++m) t *= cells[off[m]];
        off += d_;
        q += t;
    }
    return q;
}

void TensorEvaluator::partial_sums(const std::vector<double>& cells, std::vector<double>& out) const {
    out.assign(static_cast<std::size_t>(n_), 0.0);
    if (uniform_) {
        std::vector<double> S(static_cast<std::size_t>(d_), 0.0);
        for (int i = 0; i < n_; ++i) {
            const double* row = &cells[static_cast<std::size_t>(i * d_)];
            for (int m = std::min(d_ - 1, i); m >= 1; --m) S[m] += row[m] * S[m - 1];
            S[0] += row[0];
            out[static_cast<std::size_t>(i)] = value_ * S[d_ - 1];
        }
        return;
    }
    const std::uint32_t* off = offsets_.data();
    for (std::size_t e = 0; e < coefs_.size(); ++e) {
        double t = coefs_[e];
        for (int m = 0; m < d_; ++m) t *= cells[off[m]];
        off += d_;
        out[static_cast<std::size_t>(last_[e] - 1)] += t;
    }
    for (int k = 1; k < n_; ++k) out[k] += out[k - 1];
}

// ---------------------------------------------------------------------------
// Sampling

unsigned resolve_threads(unsigned requested) {
    if (requested > 0) return requested;
    if (const char* env = std::getenv("POLYMART_THREADS")) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (end != env && v > 0) return static_cast<unsigned>(v);
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

void parallel_ranges(std::size_t count, unsigned threads,
                     const std::function<void(std::size_t, std::size_t)>& body) {
    threads = std::max(1u, threads);
    if (threads == 1 || count < 2 * threads) {
        body(0, count);
        return;
    }
    std::vector<std::thread> pool;
    const std::size_t chunk = (count + threads - 1) / threads;
    for (unsigned t = 0; t < threads; ++t) {
        const std::size_t first = t * chunk;
        const std::size_t last = std::min(count, first + chunk);
        if (first >= last) break;
        pool.emplace_back(body, first, last);
    }
    for (auto& th : pool) th.join();
}

std::vector<double> sample_Q(const PolynomialModel& model, std::uint64_t seed, std::size_t replications,
                             unsigned threads) {
    if (replications == 0) throw std::invalid_argument("sample_Q: replications must be >= 1");
    const CellSampler sampler(model, seed);
    const TensorEvaluator eval(model.coefficients);
    std::vector<double> out(replications);
    parallel_ranges(replications, threads, [&](std::size_t first, std::size_t last) {
        std::vector<double> cells;
        for (std::size_t r = first; r < last; ++r) {
            sampler.fill(r, cells);
            out[r] = eval(cells);
        }
    });
    return out;
}

std::vector<double> sample_R(const PolynomialModel& model, const std::vector<int>& multiplicities,
                             std::uint64_t seed, std::size_t replications, unsigned threads) {
    if (replications == 0) throw std::invalid_argument("sample_R: replications must be >= 1");
    if (multiplicities.empty() || static_cast<int>(multiplicities.size()) != model.d)
        throw std::invalid_argument("sample_R: one multiplicity per factor vector is required");
    for (int k : multiplicities)
        if (k < 1) throw std::invalid_argument("sample_R: multiplicities must be >= 1");
    if (model.regime.tag != Regime::CommonIndependent)
        throw std::invalid_argument("sample_R: inputs must be common independent");
    std::vector<double> centers(multiplicities.size());
    for (std::size_t l = 0; l < multiplicities.size(); ++l) {
        centers[l] = model.factors[l].raw_moment(multiplicities[l]);
        if (!std::isfinite(centers[l])) throw std::domain_error("sample_R: E xi^k is infinite");
    }
    const CellSampler sampler(model, seed);
    const TensorEvaluator eval(model.coefficients);
    const int d = model.d;
    std::vector<double> out(replications);
    parallel_ranges(replications, threads, [&](std::size_t first, std::size_t last) {
        std::vector<double> cells;
        for (std::size_t r = first; r < last; ++r) {
            sampler.fill(r, cells);
            for (std::size_t c = 0; c < cells.size(); ++c) {
                const std::size_t l = c % static_cast<std::size_t>(d);
                cells[c] = std::pow(cells[c], multiplicities[l]) - centers[l];
            }
            out[r] = eval(cells);
        }
    });
    return out;
}

std::vector<double> sample_reverse_V(const PolynomialModel& model, std::uint64_t seed, std::size_t replications,
                                     int n_start, int N, unsigned threads) {
    if (replications == 0) throw std::invalid_argument("sample_reverse_V: replications must be >= 1");
    if (N != model.n) throw std::invalid_argument("sample_reverse_V: N must equal the model horizon");
    if (n_start < 1 || n_start > N - model.d + 1) throw std::invalid_argument("sample_reverse_V: window too small");
    PolynomialModel forward = model;
    std::reverse(forward.factors.begin(), forward.factors.end());
    const CellSampler sampler(forward, seed);
    const TensorEvaluator eval(model.coefficients.restrict_window(n_start, N));
    const int d = model.d;
    std::vector<double> out(replications);
    parallel_ranges(replications, threads, [&](std::size_t first, std::size_t last) {
        std::vector<double> fwd, cells(static_cast<std::size_t>(N * d));
        for (std::size_t r = first; r < last; ++r) {
            sampler.fill(r, fwd);
            // xi(i, m) = xi'(N - i + 1, d - m + 1)
            for (int i = 0; i < N; ++i)
                for (int m = 0; m < d; ++m)
                    cells[static_cast<std::size_t>(i * d + m)] = fwd[static_cast<std::size_t>((N - 1 - i) * d + (d - 1 - m))];
            out[r] = eval(cells);
        }
    });
    return out;
}

NormalizedModel normalize_model(const PolynomialModel& model) {
    model.validate();
    NormalizedModel out{model, 1.0};
    double prod = 1.0;
    for (int m = 0; m < model.d; ++m) {
        const double var = model.factors[m].variance();
        if (!std::isfinite(var) || !(var > 0.0))
            throw std::domain_error("normalize_model: input " + std::to_string(m + 1) + " has zero or infinite variance");
        const double sigma = std::sqrt(var);
        prod *= sigma;
        if (sigma != 1.0) out.model.factors[m] = model.factors[m].scaled(1.0 / sigma);
    }
    out.model.coefficients = prod == 1.0 ? model.coefficients : model.coefficients.scaled(prod);
    out.q_scale = std::sqrt(out.model.coefficients.sum_squares());
    return out;
}

}  // namespace polymart
