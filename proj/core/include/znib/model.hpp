#pragma once

// Datasets, link regimes and model specifications tying covariates to the
// per-observation law (p_i, q0i, qNi).

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <Eigen/Dense>

namespace znib {

/// Name of the constant column. Requested explicitly with the token "1".
inline constexpr const char* kInterceptColumn = "(intercept)";

enum class Family { Binomial, ZIB, NIB, ZNIB, BetaBinomial, ZNIBB };

bool has_zero_inflation(Family f);
bool has_n_inflation(Family f);
bool is_beta_binomial(Family f);
std::string to_string(Family f);
/// Accepts binomial, zib, nib, znib, betabin (or betabinomial), znibb.
Family parse_family(const std::string& name);

// -- success link -----------------------------------------------------------

/// Single logit(p) shared by all rows.
struct ConstantLogit {
    bool operator==(const ConstantLogit&) const = default;
};

/// logit(p_i) = coef' X_i over the named columns.
struct LogitLinear {
    std::vector<std::string> columns;
    bool operator==(const LogitLinear&) const = default;
};

/// Beta-binomial body with shape pair (r1, r2), stored as logs.
struct BetaShape {
    bool operator==(const BetaShape&) const = default;
};

using SuccessLink = std::variant<ConstantLogit, LogitLinear, BetaShape>;

// -- inflation link ---------------------------------------------------------

struct NoInflation {
    bool operator==(const NoInflation&) const = default;
};

/// Hurdle: scalar logits theta0, thetaN for every row.
struct ConstantHurdle {
    bool operator==(const ConstantHurdle&) const = default;
};

/// (q0i, qNi, rest) = softmax(beta' X_i, gamma' X_i, 0).
struct SoftmaxCovariate {
    std::vector<std::string> zero_columns;
    std::vector<std::string> n_columns;
    bool operator==(const SoftmaxCovariate&) const = default;
};

/// q0i proportional to p_i^alpha0, qNi to (1 - p_i)^alphaN, normalised by
/// 1 + p_i^alpha0 + (1 - p_i)^alphaN. Parameters stored as log alpha.
struct PowerLink {
    bool operator==(const PowerLink&) const = default;
};

using LinkSpec = std::variant<NoInflation, ConstantHurdle, SoftmaxCovariate, PowerLink>;

struct ModelSpec {
    Family family = Family::Binomial;
    SuccessLink success = ConstantLogit{};
    LinkSpec inflation = NoInflation{};

    /// Throws ValidationError on an invalid family/link combination.
    void validate() const;
    std::string label() const;
    bool operator==(const ModelSpec&) const = default;
};

std::string success_kind(const SuccessLink& s);
std::string inflation_kind(const LinkSpec& l);

/// Packing order: success parameters, then zero-inflation, then N-inflation.
///   ConstantLogit    logit_p
///   LogitLinear      p:<column> ...
///   BetaShape        log_r1, log_r2
///   ConstantHurdle   theta0, thetaN
///   SoftmaxCovariate q0:<column> ..., qN:<column> ...
///   PowerLink        log_alpha0, log_alphaN
std::vector<std::string> parameter_names(const ModelSpec& spec);
int arity(const ModelSpec& spec);

Eigen::VectorXd pack(const ModelSpec& spec, const std::map<std::string, double>& named);
std::vector<std::pair<std::string, double>> unpack(const ModelSpec& spec, const Eigen::VectorXd& packed);

/// Success coefficients are free; every other coordinate lives in
/// [-kLogitClamp, kLogitClamp].
std::pair<Eigen::VectorXd, Eigen::VectorXd> parameter_bounds(const ModelSpec& spec);

// -- data -------------------------------------------------------------------

/// A design column; derived columns record their source and power so grids
/// over the source can be recomputed.
struct Column {
    std::string name;
    std::string source;
    int power = 1;
};

/// Observations (y_i, N_i), a named design matrix and optional
/// multiplicities (grouped count-of-counts form).
struct Dataset {
    std::vector<int> y;
    std::vector<int> n;
    Eigen::MatrixXd X;
    std::vector<Column> columns;
    std::vector<double> multiplicity;

    Dataset() = default;
    Dataset(std::vector<int> successes, std::vector<int> trials);

    /// Grouped form with rows k = 0..N and the given counts as multiplicities.
    static Dataset grouped_counts(int n_trials, std::span<const double> counts);

    Dataset& add_intercept();
    Dataset& add_column(const std::string& name, std::span<const double> values);

    void validate() const;
    std::size_t size() const { return y.size(); }
    bool empty() const { return y.empty(); }
    bool grouped() const { return !multiplicity.empty(); }
    double weight(std::size_t i) const { return multiplicity.empty() ? 1.0 : multiplicity[i]; }
    double total_weight() const;
    std::optional<int> common_n() const;

    bool has_column(const std::string& name) const;
    int column_index(const std::string& name) const;
    /// Rows x selected columns, in the order given.
    Eigen::MatrixXd design(const std::vector<std::string>& names) const;

    /// Covariate row with `column` and its derived powers set from `value`,
    /// the intercept at 1 and every other column at its sample mean.
    Eigen::RowVectorXd grid_row(const std::string& column, double value) const;

    /// Same covariates with successes and failures exchanged.
    Dataset reflected() const;

    /// FNV-1a hash over every value; equal data gives equal fingerprints.
    std::uint64_t fingerprint() const;
};

/// Centre and scale the named non-intercept columns to mean 0, sd 1.
void standardize(Dataset& data, const std::vector<std::string>& names);

/// Column roles for CSV input.
struct CsvColumns {
    std::string y;
    std::string n;              // empty when n_constant is used
    std::optional<int> n_constant;
    std::string multiplicity;   // empty: ungrouped
    /// Tokens: "1" (intercept), a column name, or "name^k" for a power.
    std::vector<std::string> covariates;
    bool standardize = false;
    char delimiter = ',';
};

Dataset load_csv(const std::string& path, const CsvColumns& roles);
Dataset parse_csv(std::istream& in, const CsvColumns& roles);

// -- link evaluation -------------------------------------------------------

struct RowLaw {
    double p = 0.5;
    double q0 = 0.0;
    double qN = 0.0;
};

/// Per-row linear predictors in log-odds form. `a` and `c` are the log odds of
/// the zero and N components against the body (-inf when absent). For
/// beta-binomial bodies `eta` is log(r1 / r2).
struct RowPredictor {
    double eta = 0.0;
    double a = 0.0;
    double c = 0.0;
    double da_deta = 0.0;
    double dc_deta = 0.0;
    bool a_clamped = false;
    bool c_clamped = false;
};

/// A spec bound to the design of one dataset. Copies what it needs, so it
/// does not reference the dataset after construction.
class BoundModel {
  public:
    BoundModel(ModelSpec spec, const Dataset& data);

    const ModelSpec& spec() const { return spec_; }
    int arity() const { return arity_; }
    std::size_t rows() const { return y_.size(); }

    int success_offset() const { return 0; }
    int success_size() const { return success_size_; }
    int zero_offset() const { return zero_offset_; }
    int zero_size() const { return zero_size_; }
    int n_offset() const { return n_offset_; }
    int n_size() const { return n_size_; }

    const Eigen::MatrixXd& success_design() const { return xs_; }
    const Eigen::MatrixXd& zero_design() const { return x0_; }
    const Eigen::MatrixXd& n_design() const { return xn_; }
    const std::vector<int>& y() const { return y_; }
    const std::vector<int>& n() const { return n_; }
    const Eigen::VectorXd& weights() const { return w_; }

    RowPredictor predictor(const Eigen::VectorXd& x, std::size_t i) const;
    /// Predictor for an arbitrary covariate row aligned with the dataset columns.
    RowPredictor predictor_at(const Eigen::VectorXd& x, const Eigen::RowVectorXd& covariates) const;

    /// Beta-binomial shapes (r1, r2); only for beta-binomial families.
    std::pair<double, double> shapes(const Eigen::VectorXd& x) const;

    RowLaw law(const Eigen::VectorXd& x, const RowPredictor& pred) const;
    std::vector<RowLaw> evaluate(const Eigen::VectorXd& x) const;

  private:
    RowPredictor make_predictor(const Eigen::VectorXd& x, double eta, double a_lin, double c_lin) const;

    ModelSpec spec_;
    std::vector<int> y_, n_;
    Eigen::VectorXd w_;
    Eigen::MatrixXd xs_, x0_, xn_;
    std::vector<int> xs_cols_, x0_cols_, xn_cols_;
    int arity_ = 0;
    int success_size_ = 0;
    int zero_offset_ = 0, zero_size_ = 0;
    int n_offset_ = 0, n_size_ = 0;
};

std::vector<RowLaw> evaluate_links(const ModelSpec& spec, const Eigen::VectorXd& packed, const Dataset& data);

}  // namespace znib
