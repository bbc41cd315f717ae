#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace fincon {

struct Linear {
  double k;

  bool operator==(const Linear&) const = default;
};

/// f(z) = a sign(z)|z|^c + b z
struct PowerLinear {
  double a;
  double b;
  double c;

  bool operator==(const PowerLinear&) const = default;
};

/// f(z) = -a sign(z)|z|^c ln|z| for 0 < |z| <= 1/e, a sign(z)|z|^c beyond.
struct LogPower {
  double a;
  double c;

  bool operator==(const LogPower&) const = default;
};

/// One agent's feedback map. Parameters are validated on construction.
class ProtocolFunction {
public:
  using Kind = std::variant<Linear, PowerLinear, LogPower>;

  /// Throws InvalidProtocol on out-of-range parameters.
  static ProtocolFunction linear(double k);
  static ProtocolFunction power_linear(double a, double b, double c);
  static ProtocolFunction log_power(double a, double c);
  static ProtocolFunction from_kind(const Kind& kind);

  const Kind& kind() const { return kind_; }
  std::string name() const;

  double operator()(double z) const { return eval(z); }
  double eval(double z) const;
  /// F(z) = integral of f from 0 to z, in closed form.
  double antiderivative(double z) const;

  bool operator==(const ProtocolFunction&) const = default;

private:
  explicit ProtocolFunction(Kind kind) : kind_(kind) {}
  Kind kind_;
};

/// Breakpoint of the log-power branch, 1/e.
inline constexpr double kLogPowerBreak = 0.36787944117144233;

/// One protocol function per agent.
class ProtocolBank {
public:
  ProtocolBank() = default;
  explicit ProtocolBank(std::vector<ProtocolFunction> functions) : functions_(std::move(functions)) {}
  static ProtocolBank uniform(const ProtocolFunction& f, std::size_t n);

  std::size_t size() const { return functions_.size(); }
  const ProtocolFunction& operator[](std::size_t i) const { return functions_[i]; }
  const std::vector<ProtocolFunction>& functions() const { return functions_; }
  auto begin() const { return functions_.begin(); }
  auto end() const { return functions_.end(); }

  ProtocolBank subset(const std::vector<std::size_t>& agents) const;

  template <class T>
  bool all_of_kind() const {
    for (const auto& f : functions_) {
      if (!std::holds_alternative<T>(f.kind())) return false;
    }
    return !functions_.empty();
  }

  bool operator==(const ProtocolBank&) const = default;

private:
  std::vector<ProtocolFunction> functions_;
};

/// Parses `linear{k=1}`, `powerlinear{a=1, b=1, c=0.75}`, `logpower{a=1, c=0.5}`.
/// Throws ParseError on malformed text, InvalidProtocol on bad parameters.
ProtocolFunction parse_protocol_spec(std::string_view text);
/// Inverse of parse_protocol_spec; numbers are written with 17 significant digits.
std::string to_spec_string(const ProtocolFunction& f);

// ---------------------------------------------------------------------------
// Assumption checks

/// Sampling plan for the criteria checks.
struct GridSpec {
  /// points per sign
  std::size_t points = 10000;
  /// the logarithmic (A2) grid starts at bound * min_fraction
  double min_fraction = 1e-12;
};

struct A1Report {
  bool zero_only_at_zero = false;
  bool sign_preserving = false;
  bool continuous = false;
  /// reported separately and never fatal
  bool monotone = false;
  /// location of the first monotonicity violation, if any
  std::optional<double> monotonicity_violation;

  /// The properties the convergence argument relies on.
  bool pass() const { return zero_only_at_zero && sign_preserving && continuous; }
};

/// Samples [-bound, bound] uniformly plus the log-power breakpoints, and
/// localizes suspected jumps by bisection.
A1Report check_a1(const std::function<double(double)>& f, double bound, const GridSpec& grid = {});
A1Report check_a1(const ProtocolFunction& f, double bound, const GridSpec& grid = {});

/// Outcome of the (A2) grid check.
struct CriteriaReport {
  std::vector<A1Report> a1;
  bool a2_pass = false;
  double alpha = 0.0;
  double beta = 0.0;
  double empirical_ratio_min = 0.0;
  /// argument at which the empirical minimum occurs
  double argmin = 0.0;
  double bound_M = 0.0;
  std::size_t grid_size = 0;
  /// some agent's ratio tends to 0 as z -> 0, so no beta > 0 exists
  bool vanishes_at_zero = false;

  bool a1_pass() const;
};

/// f(z)^2 / F(z)^alpha. Throws DomainError when F(z) <= 0 at z != 0.
double a2_ratio(const ProtocolFunction& f, double z, double alpha);

/// Exponent p with f(z)^2 / F(z)^alpha ~ |z|^p as z -> 0 (log factors
/// dropped). The ratio vanishes at the origin iff p > 0.
double small_argument_exponent(const ProtocolFunction& f, double alpha);

/// Logarithmic grid on [bound * min_fraction, bound], both signs, with
/// +-1/e (when inside) and +-bound forced in. Sorted by value.
std::vector<double> a2_grid(double bound, const GridSpec& grid = {});

/// Minimum of the (A2) ratio over agents and grid, refined locally around
/// the best grid point. a2_pass is (minimum >= beta) and no agent's ratio
/// vanishes at the origin. a1 is left empty. Throws DomainError unless
/// bound > 0 and 0 < alpha < 1.
CriteriaReport check_a2(const ProtocolBank& bank, double bound, double alpha, double beta,
                        const GridSpec& grid = {});

struct ClaimConstants {
  double alpha = 0.0;
  double beta = 0.0;
  /// only set for the log-power claim
  std::optional<double> beta1;
  std::optional<double> beta2;
  /// grid minimum of the ratio at this alpha; only set for the log-power claim
  std::optional<double> empirical_beta;
};

/// Closed-form constants for power-linear banks. Throws WrongProtocolKind.
ClaimConstants claim1_constants(const ProtocolBank& bank, double bound);
/// Closed-form constants for log-power banks plus the empirical minimum.
/// Throws WrongProtocolKind.
ClaimConstants claim2_constants(const ProtocolBank& bank, double bound, const GridSpec& grid = {});

enum class BetaSource { ClosedForm, Empirical };

/// The (alpha, beta) pair handed to certification.
struct ConstantsChoice {
  double alpha = 0.0;
  std::optional<double> beta_closed_form;
  double beta_empirical = 0.0;
  double beta = 0.0;
  BetaSource source = BetaSource::Empirical;
  /// whether the grid check accepts the chosen beta
  bool a2_pass = false;
};

/// Picks alpha from the claim formulas (mixed banks: the largest per-agent
/// alpha; linear members give no admissible alpha and fall back to 1/2),
/// evaluates the closed-form beta where one exists and the empirical grid
/// minimum. Power-linear banks use the smaller of the two; every other bank
/// uses the empirical minimum.
ConstantsChoice select_constants(const ProtocolBank& bank, double bound, const GridSpec& grid = {});

}  // namespace fincon
