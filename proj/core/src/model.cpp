#include "znib/model.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <limits>
#include <set>

#include "znib/distributions.hpp"
#include "znib/error.hpp"
#include "znib/special.hpp"

namespace znib {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

}  // namespace

bool has_zero_inflation(Family f) { return f == Family::ZIB || f == Family::ZNIB || f == Family::ZNIBB; }
bool has_n_inflation(Family f) { return f == Family::NIB || f == Family::ZNIB || f == Family::ZNIBB; }
bool is_beta_binomial(Family f) { return f == Family::BetaBinomial || f == Family::ZNIBB; }

std::string to_string(Family f) {
    switch (f) {
        case Family::Binomial: return "binomial";
        case Family::ZIB: return "zib";
        case Family::NIB: return "nib";
        case Family::ZNIB: return "znib";
        case Family::BetaBinomial: return "betabin";
        case Family::ZNIBB: return "znibb";
    }
    return "unknown";
}

Family parse_family(const std::string& name) {
    std::string s = name;
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char ch) { return static_cast<char>(std::tolower(ch)); });
    if (s == "binomial") return Family::Binomial;
    if (s == "zib") return Family::ZIB;
    if (s == "nib") return Family::NIB;
    if (s == "znib") return Family::ZNIB;
    if (s == "betabin" || s == "betabinomial" || s == "beta-binomial") return Family::BetaBinomial;
    if (s == "znibb") return Family::ZNIBB;
    throw ValidationError("unknown family '" + name + "'");
}

std::string success_kind(const SuccessLink& s) {
    return std::visit(overloaded{[](const ConstantLogit&) { return std::string("constant"); },
                                 [](const LogitLinear&) { return std::string("covariate"); },
                                 [](const BetaShape&) { return std::string("shape"); }},
                      s);
}

std::string inflation_kind(const LinkSpec& l) {
    return std::visit(overloaded{[](const NoInflation&) { return std::string("none"); },
                                 [](const ConstantHurdle&) { return std::string("constant"); },
                                 [](const SoftmaxCovariate&) { return std::string("covariate"); },
                                 [](const PowerLink&) { return std::string("power"); }},
                      l);
}

void ModelSpec::validate() const {
    const bool bb = is_beta_binomial(family);
    const bool shape = std::holds_alternative<BetaShape>(success);
    if (bb && !shape) throw ValidationError(to_string(family) + ": beta-binomial families take a shape pair, not a logit link");
    if (!bb && shape) throw ValidationError(to_string(family) + ": shape pair only applies to beta-binomial families");
    if (const auto* lin = std::get_if<LogitLinear>(&success); lin && lin->columns.empty()) {
        throw ValidationError("covariate success link needs at least one column");
    }

    const bool inflated = has_zero_inflation(family) || has_n_inflation(family);
    const bool none = std::holds_alternative<NoInflation>(inflation);
    if (!inflated && !none) throw ValidationError(to_string(family) + ": family has no inflation components");
    if (inflated && none) throw ValidationError(to_string(family) + ": inflated family needs an inflation link");
    if (bb && std::holds_alternative<PowerLink>(inflation)) {
        throw ValidationError(to_string(family) + ": power link is not available for beta-binomial families");
    }
    if (const auto* soft = std::get_if<SoftmaxCovariate>(&inflation)) {
        if (has_zero_inflation(family) == soft->zero_columns.empty()) {
            throw ValidationError(to_string(family) + ": zero-inflation columns do not match the family");
        }
        if (has_n_inflation(family) == soft->n_columns.empty()) {
            throw ValidationError(to_string(family) + ": N-inflation columns do not match the family");
        }
    }
}

std::string ModelSpec::label() const {
    std::string out = to_string(family);
    if (const auto* lin = std::get_if<LogitLinear>(&success)) {
        out += "(p:";
        for (std::size_t i = 0; i < lin->columns.size(); ++i) out += (i ? "," : "") + lin->columns[i];
        out += ")";
    }
    if (!std::holds_alternative<NoInflation>(inflation)) out += "/" + inflation_kind(inflation);
    return out;
}

std::vector<std::string> parameter_names(const ModelSpec& spec) {
    spec.validate();
    std::vector<std::string> out;
    std::visit(overloaded{[&](const ConstantLogit&) { out.emplace_back("logit_p"); },
                          [&](const LogitLinear& l) {
                              for (const auto& c : l.columns) out.push_back("p:" + c);
                          },
                          [&](const BetaShape&) {
                              out.emplace_back("log_r1");
                              out.emplace_back("log_r2");
                          }},
               spec.success);
    const bool zero = has_zero_inflation(spec.family);
    const bool nn = has_n_inflation(spec.family);
    std::visit(overloaded{[&](const NoInflation&) {},
                          [&](const ConstantHurdle&) {
                              if (zero) out.emplace_back("theta0");
                              if (nn) out.emplace_back("thetaN");
                          },
                          [&](const SoftmaxCovariate& s) {
                              for (const auto& c : s.zero_columns) out.push_back("q0:" + c);
                              for (const auto& c : s.n_columns) out.push_back("qN:" + c);
                          },
                          [&](const PowerLink&) {
                              if (zero) out.emplace_back("log_alpha0");
                              if (nn) out.emplace_back("log_alphaN");
                          }},
               spec.inflation);
    return out;
}

int arity(const ModelSpec& spec) { return static_cast<int>(parameter_names(spec).size()); }

Eigen::VectorXd pack(const ModelSpec& spec, const std::map<std::string, double>& named) {
    const auto names = parameter_names(spec);
    const std::set<std::string> known(names.begin(), names.end());
    for (const auto& [k, v] : named) {
        if (!known.count(k)) throw ValidationError("pack: unknown parameter '" + k + "' for " + spec.label());
    }
    Eigen::VectorXd out(static_cast<Eigen::Index>(names.size()));
    for (std::size_t i = 0; i < names.size(); ++i) {
        const auto it = named.find(names[i]);
        if (it == named.end()) throw ValidationError("pack: missing parameter '" + names[i] + "'");
        out[static_cast<Eigen::Index>(i)] = it->second;
    }
    return out;
}

std::vector<std::pair<std::string, double>> unpack(const ModelSpec& spec, const Eigen::VectorXd& packed) {
    const auto names = parameter_names(spec);
    if (static_cast<std::size_t>(packed.size()) != names.size()) {
        throw ValidationError("unpack: expected " + std::to_string(names.size()) + " parameters, got " +
                              std::to_string(packed.size()));
    }
    std::vector<std::pair<std::string, double>> out;
    for (std::size_t i = 0; i < names.size(); ++i) out.emplace_back(names[i], packed[static_cast<Eigen::Index>(i)]);
    return out;
}

std::pair<Eigen::VectorXd, Eigen::VectorXd> parameter_bounds(const ModelSpec& spec) {
    const int k = arity(spec);
    int free = 0;
    if (const auto* lin = std::get_if<LogitLinear>(&spec.success)) free = static_cast<int>(lin->columns.size());
    if (std::holds_alternative<ConstantLogit>(spec.success)) free = 1;
    Eigen::VectorXd lo = Eigen::VectorXd::Constant(k, -kLogitClamp);
    Eigen::VectorXd hi = Eigen::VectorXd::Constant(k, kLogitClamp);
    lo.head(free).setConstant(-kInf);
    hi.head(free).setConstant(kInf);
    return {lo, hi};
}

// -- Dataset ---------------------------------------------------------------

Dataset::Dataset(std::vector<int> successes, std::vector<int> trials)
    : y(std::move(successes)), n(std::move(trials)), X(static_cast<Eigen::Index>(y.size()), 0) {}

Dataset Dataset::grouped_counts(int n_trials, std::span<const double> counts) {
    if (counts.size() != static_cast<std::size_t>(n_trials) + 1) {
        throw ValidationError("grouped_counts: need one count per outcome 0..N");
    }
    Dataset d;
    for (int k = 0; k <= n_trials; ++k) {
        const double c = counts[static_cast<std::size_t>(k)];
        if (!(c >= 0.0) || !std::isfinite(c)) throw ValidationError("grouped_counts: counts must be nonnegative");
        if (c == 0.0) continue;
        d.y.push_back(k);
        d.n.push_back(n_trials);
        d.multiplicity.push_back(c);
    }
    d.X.resize(static_cast<Eigen::Index>(d.y.size()), 0);
    return d;
}

Dataset& Dataset::add_intercept() {
    const std::vector<double> ones(y.size(), 1.0);
    add_column(kInterceptColumn, ones);
    columns.back().source.clear();
    columns.back().power = 0;
    return *this;
}

Dataset& Dataset::add_column(const std::string& name, std::span<const double> values) {
    if (values.size() != y.size()) throw ValidationError("add_column: column '" + name + "' has the wrong length");
    if (has_column(name)) throw ValidationError("add_column: duplicate column '" + name + "'");
    if (X.rows() != static_cast<Eigen::Index>(y.size())) X.resize(static_cast<Eigen::Index>(y.size()), 0);
    X.conservativeResize(Eigen::NoChange, X.cols() + 1);
    for (std::size_t i = 0; i < values.size(); ++i) X(static_cast<Eigen::Index>(i), X.cols() - 1) = values[i];
    columns.push_back({name, name, 1});
    return *this;
}

void Dataset::validate() const {
    if (n.size() != y.size()) throw ValidationError("dataset: y and n lengths differ");
    if (X.rows() != static_cast<Eigen::Index>(y.size())) throw ValidationError("dataset: covariate rows differ from y length");
    if (static_cast<std::size_t>(X.cols()) != columns.size()) throw ValidationError("dataset: column names do not match the design");
    if (!multiplicity.empty() && multiplicity.size() != y.size()) throw ValidationError("dataset: multiplicity length differs");
    for (std::size_t i = 0; i < y.size(); ++i) {
        if (n[i] < 0 || y[i] < 0 || y[i] > n[i]) {
            throw DataError("dataset: need 0 <= y <= n, got y=" + std::to_string(y[i]) + ", n=" + std::to_string(n[i]), i + 1);
        }
        if (!multiplicity.empty() && !(multiplicity[i] >= 1.0 && std::isfinite(multiplicity[i]))) {
            throw DataError("dataset: multiplicities must be >= 1", i + 1);
        }
    }
    if (!X.allFinite()) throw ValidationError("dataset: covariates must be finite");
}

double Dataset::total_weight() const {
    if (multiplicity.empty()) return static_cast<double>(y.size());
    double s = 0.0;
    for (double m : multiplicity) s += m;
    return s;
}

std::optional<int> Dataset::common_n() const {
    if (n.empty()) return std::nullopt;
    for (int v : n) {
        if (v != n.front()) return std::nullopt;
    }
    return n.front();
}

bool Dataset::has_column(const std::string& name) const {
    return std::any_of(columns.begin(), columns.end(), [&](const Column& c) { return c.name == name; });
}

int Dataset::column_index(const std::string& name) const {
    for (std::size_t j = 0; j < columns.size(); ++j) {
        if (columns[j].name == name) return static_cast<int>(j);
    }
    throw ValidationError("dataset has no column '" + name + "'");
}

Eigen::MatrixXd Dataset::design(const std::vector<std::string>& names) const {
    Eigen::MatrixXd out(X.rows(), static_cast<Eigen::Index>(names.size()));
    for (std::size_t j = 0; j < names.size(); ++j) out.col(static_cast<Eigen::Index>(j)) = X.col(column_index(names[j]));
    return out;
}

Eigen::RowVectorXd Dataset::grid_row(const std::string& column, double value) const {
    if (!has_column(column)) throw ValidationError("grid column '" + column + "' not in dataset");
    Eigen::RowVectorXd out(X.cols());
    for (Eigen::Index j = 0; j < X.cols(); ++j) {
        const auto& c = columns[static_cast<std::size_t>(j)];
        if (c.name == kInterceptColumn) {
            out[j] = 1.0;
        } else if (c.source == column || c.name == column) {
            out[j] = std::pow(value, c.source == column ? c.power : 1);
        } else {
            out[j] = X.rows() ? X.col(j).mean() : 0.0;
        }
    }
    return out;
}

Dataset Dataset::reflected() const {
    Dataset out = *this;
    for (std::size_t i = 0; i < y.size(); ++i) out.y[i] = n[i] - y[i];
    return out;
}

std::uint64_t Dataset::fingerprint() const {
    std::uint64_t h = 14695981039346656037ULL;
    auto mix = [&h](std::uint64_t v) {
        for (int b = 0; b < 8; ++b) {
            h ^= (v >> (8 * b)) & 0xFFu;
            h *= 1099511628211ULL;
        }
    };
    mix(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) {
        mix(static_cast<std::uint64_t>(y[i]));
        mix(static_cast<std::uint64_t>(n[i]));
        mix(std::bit_cast<std::uint64_t>(weight(i)));
    }
    for (Eigen::Index j = 0; j < X.cols(); ++j) {
        for (char ch : columns[static_cast<std::size_t>(j)].name) mix(static_cast<unsigned char>(ch));
        for (Eigen::Index i = 0; i < X.rows(); ++i) mix(std::bit_cast<std::uint64_t>(X(i, j)));
    }
    return h;
}

void standardize(Dataset& data, const std::vector<std::string>& names) {
    for (const auto& name : names) {
        if (name == kInterceptColumn) continue;
        const int j = data.column_index(name);
        auto col = data.X.col(j);
        const auto m = static_cast<double>(col.size());
        if (m < 2) throw ValidationError("standardize: need at least two rows");
        const double mean = col.mean();
        const double sd = std::sqrt((col.array() - mean).square().sum() / (m - 1.0));
        if (!(sd > 0.0)) throw ValidationError("standardize: column '" + name + "' is constant");
        col = (col.array() - mean) / sd;
    }
}

// -- BoundModel --------------------------------------------------------------

BoundModel::BoundModel(ModelSpec spec, const Dataset& data) : spec_(std::move(spec)), y_(data.y), n_(data.n) {
    spec_.validate();
    data.validate();
    const auto rows = static_cast<Eigen::Index>(data.size());
    w_.resize(rows);
    for (Eigen::Index i = 0; i < rows; ++i) w_[i] = data.weight(static_cast<std::size_t>(i));

    auto indices = [&](const std::vector<std::string>& names) {
        std::vector<int> out;
        for (const auto& nm : names) out.push_back(data.column_index(nm));
        return out;
    };
    const Eigen::MatrixXd ones = Eigen::MatrixXd::Ones(rows, 1);

    if (const auto* lin = std::get_if<LogitLinear>(&spec_.success)) {
        xs_ = data.design(lin->columns);
        xs_cols_ = indices(lin->columns);
        success_size_ = static_cast<int>(lin->columns.size());
    } else if (std::holds_alternative<ConstantLogit>(spec_.success)) {
        xs_ = ones;
        xs_cols_ = {-1};
        success_size_ = 1;
    } else {
        success_size_ = 2;
    }

    int offset = success_size_;
    const bool zero = has_zero_inflation(spec_.family);
    const bool nn = has_n_inflation(spec_.family);
    x0_ = xn_ = Eigen::MatrixXd(rows, 0);
    if (const auto* soft = std::get_if<SoftmaxCovariate>(&spec_.inflation)) {
        x0_ = data.design(soft->zero_columns);
        xn_ = data.design(soft->n_columns);
        x0_cols_ = indices(soft->zero_columns);
        xn_cols_ = indices(soft->n_columns);
        zero_size_ = static_cast<int>(soft->zero_columns.size());
        n_size_ = static_cast<int>(soft->n_columns.size());
    } else if (!std::holds_alternative<NoInflation>(spec_.inflation)) {
        if (zero) {
            x0_ = ones;
            x0_cols_ = {-1};
            zero_size_ = 1;
        }
        if (nn) {
            xn_ = ones;
            xn_cols_ = {-1};
            n_size_ = 1;
        }
    }
    zero_offset_ = offset;
    offset += zero_size_;
    n_offset_ = offset;
    offset += n_size_;
    arity_ = offset;
}

RowPredictor BoundModel::make_predictor(const Eigen::VectorXd& x, double eta, double a_lin, double c_lin) const {
    RowPredictor out;
    out.eta = eta;
    out.a = -kInf;
    out.c = -kInf;
    const bool zero = zero_size_ > 0;
    const bool nn = n_size_ > 0;
    if (std::holds_alternative<PowerLink>(spec_.inflation)) {
        const double p = special::sigmoid(eta);
        if (zero) {
            const double alpha = std::exp(x[zero_offset_]);
            out.a = alpha * special::log_sigmoid(eta);
            out.da_deta = alpha * (1.0 - p);
        }
        if (nn) {
            const double alpha = std::exp(x[n_offset_]);
            out.c = alpha * special::log_sigmoid(-eta);
            out.dc_deta = -alpha * p;
        }
        return out;
    }
    if (zero) {
        out.a_clamped = std::abs(a_lin) > kLogitClamp;
        out.a = std::clamp(a_lin, -kLogitClamp, kLogitClamp);
    }
    if (nn) {
        out.c_clamped = std::abs(c_lin) > kLogitClamp;
        out.c = std::clamp(c_lin, -kLogitClamp, kLogitClamp);
    }
    return out;
}

RowPredictor BoundModel::predictor(const Eigen::VectorXd& x, std::size_t i) const {
    if (x.size() != arity_) throw ValidationError("packed parameter length does not match the model");
    const auto r = static_cast<Eigen::Index>(i);
    double eta = 0.0;
    if (success_size_ && xs_.cols()) {
        eta = xs_.row(r).dot(x.head(success_size_));
    } else {
        eta = x[0] - x[1];
    }
    const double a = zero_size_ ? x0_.row(r).dot(x.segment(zero_offset_, zero_size_)) : 0.0;
    const double c = n_size_ ? xn_.row(r).dot(x.segment(n_offset_, n_size_)) : 0.0;
    return make_predictor(x, eta, a, c);
}

RowPredictor BoundModel::predictor_at(const Eigen::VectorXd& x, const Eigen::RowVectorXd& covariates) const {
    if (x.size() != arity_) throw ValidationError("packed parameter length does not match the model");
    auto dot = [&](const std::vector<int>& cols, int offset) {
        double s = 0.0;
        for (std::size_t j = 0; j < cols.size(); ++j) {
            const double v = cols[j] < 0 ? 1.0 : covariates[cols[j]];
            s += v * x[offset + static_cast<int>(j)];
        }
        return s;
    };
    const double eta = xs_cols_.empty() ? x[0] - x[1] : dot(xs_cols_, 0);
    return make_predictor(x, eta, dot(x0_cols_, zero_offset_), dot(xn_cols_, n_offset_));
}

std::pair<double, double> BoundModel::shapes(const Eigen::VectorXd& x) const {
    if (!is_beta_binomial(spec_.family)) throw ValidationError("shapes: model has no beta-binomial body");
    return {std::exp(x[0]), std::exp(x[1])};
}

RowLaw BoundModel::law(const Eigen::VectorXd& x, const RowPredictor& pred) const {
    RowLaw out;
    if (is_beta_binomial(spec_.family)) {
        const auto [r1, r2] = shapes(x);
        out.p = r1 / (r1 + r2);
    } else {
        out.p = special::sigmoid(pred.eta);
    }
    const std::array<double, 3> terms{0.0, pred.a, pred.c};
    const double log_d = special::log_sum_exp(terms);
    out.q0 = std::exp(pred.a - log_d);
    out.qN = std::exp(pred.c - log_d);
    return out;
}

std::vector<RowLaw> BoundModel::evaluate(const Eigen::VectorXd& x) const {
    std::vector<RowLaw> out(rows());
    for (std::size_t i = 0; i < rows(); ++i) out[i] = law(x, predictor(x, i));
    return out;
}

std::vector<RowLaw> evaluate_links(const ModelSpec& spec, const Eigen::VectorXd& packed, const Dataset& data) {
    return BoundModel(spec, data).evaluate(packed);
}

}  // namespace znib
