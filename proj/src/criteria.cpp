#include <algorithm>
#include <cmath>
#include <limits>
#include <variant>

#include "fincon/errors.hpp"
#include "fincon/protocols.hpp"

namespace fincon {

namespace {

constexpr int kBisections = 60;

std::vector<double> a1_grid(double bound, const GridSpec& grid) {
  std::vector<double> z;
  const std::size_t n = std::max<std::size_t>(grid.points, 2);
  z.reserve(4 * n);
  for (std::size_t k = 0; k <= 2 * n; ++k) {
    z.push_back(-bound + 2.0 * bound * static_cast<double>(k) / static_cast<double>(2 * n));
  }
  // logarithmic refinement towards the origin and around the breakpoints
  const std::size_t extra = std::max<std::size_t>(n / 10, 10);
  const double lo = std::log(bound * grid.min_fraction);
  const double hi = std::log(bound);
  for (std::size_t k = 0; k < extra; ++k) {
    const double u = std::exp(lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(extra));
    z.push_back(u);
    z.push_back(-u);
  }
  if (kLogPowerBreak < bound) {
    for (double off : {0.0, 1e-9, 1e-7, 1e-5, 1e-3}) {
      for (double s : {-1.0, 1.0}) {
        z.push_back(s * (kLogPowerBreak + off));
        z.push_back(s * (kLogPowerBreak - off));
      }
    }
  }
  z.push_back(0.0);
  std::sort(z.begin(), z.end());
  z.erase(std::unique(z.begin(), z.end()), z.end());
  return z;
}

// Narrows [lo, hi] towards the larger jump; a continuous function's jump
// shrinks to nothing, a discontinuity survives.
bool jump_persists(const std::function<double(double)>& f, double lo, double hi, double tol) {
  double flo = f(lo);
  double fhi = f(hi);
  for (int it = 0; it < kBisections && hi - lo > 0.0; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    const double fmid = f(mid);
    if (std::abs(fmid - flo) >= std::abs(fhi - fmid)) {
      hi = mid;
      fhi = fmid;
    } else {
      lo = mid;
      flo = fmid;
    }
  }
  return std::abs(fhi - flo) > tol;
}

}  // namespace

A1Report check_a1(const std::function<double(double)>& f, double bound, const GridSpec& grid) {
  if (!(bound > 0.0) || !std::isfinite(bound)) throw DomainError("A1 check needs a positive bound");
  const auto z = a1_grid(bound, grid);
  std::vector<double> v(z.size());
  double scale = 1.0;
  for (std::size_t k = 0; k < z.size(); ++k) {
    v[k] = f(z[k]);
    if (std::isfinite(v[k])) scale = std::max(scale, std::abs(v[k]));
  }

  A1Report report;
  report.zero_only_at_zero = true;
  report.sign_preserving = true;
  report.continuous = true;
  report.monotone = true;
  for (std::size_t k = 0; k < z.size(); ++k) {
    if (!std::isfinite(v[k])) {
      report.continuous = false;
      continue;
    }
    if (z[k] == 0.0) {
      if (v[k] != 0.0) report.zero_only_at_zero = false;
    } else {
      if (v[k] == 0.0) report.zero_only_at_zero = false;
      if (!(z[k] * v[k] > 0.0)) report.sign_preserving = false;
    }
  }

  const double jump_tol = 1e-6 * scale;
  for (std::size_t k = 0; k + 1 < z.size(); ++k) {
    if (v[k + 1] < v[k] && report.monotone) {
      report.monotone = false;
      report.monotonicity_violation = z[k + 1];
    }
    if (report.continuous && std::abs(v[k + 1] - v[k]) > jump_tol &&
        jump_persists(f, z[k], z[k + 1], jump_tol)) {
      report.continuous = false;
    }
  }
  return report;
}

A1Report check_a1(const ProtocolFunction& f, double bound, const GridSpec& grid) {
  return check_a1([&f](double z) { return f.eval(z); }, bound, grid);
}

bool CriteriaReport::a1_pass() const {
  return std::all_of(a1.begin(), a1.end(), [](const A1Report& r) { return r.pass(); });
}

double a2_ratio(const ProtocolFunction& f, double z, double alpha) {
  const double big_f = f.antiderivative(z);
  if (!(big_f > 0.0)) {
    throw DomainError(f.name() + ": antiderivative is not positive at z = " + std::to_string(z));
  }
  const double value = f.eval(z);
  return value * value / std::pow(big_f, alpha);
}

double small_argument_exponent(const ProtocolFunction& f, double alpha) {
  if (const auto* p = std::get_if<Linear>(&f.kind())) {
    (void)p;
    return 2.0 - 2.0 * alpha;
  }
  // power-linear and log-power: f ~ |z|^c and F ~ |z|^{1+c} up to logs
  const double c = std::holds_alternative<PowerLinear>(f.kind()) ? std::get<PowerLinear>(f.kind()).c
                                                                 : std::get<LogPower>(f.kind()).c;
  return 2.0 * c - alpha * (1.0 + c);
}

std::vector<double> a2_grid(double bound, const GridSpec& grid) {
  if (!(bound > 0.0) || !std::isfinite(bound)) throw DomainError("A2 check needs a positive bound");
  const std::size_t n = std::max<std::size_t>(grid.points, 2);
  const double lo = std::log(bound * grid.min_fraction);
  const double hi = std::log(bound);
  std::vector<double> z;
  z.reserve(2 * n + 4);
  for (std::size_t k = 0; k < n; ++k) {
    const double u = std::exp(lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(n - 1));
    z.push_back(u);
  }
  z.back() = bound;
  if (kLogPowerBreak < bound) z.push_back(kLogPowerBreak);
  const auto positive = z;
  for (double u : positive) z.push_back(-u);
  std::sort(z.begin(), z.end());
  z.erase(std::unique(z.begin(), z.end()), z.end());
  return z;
}

CriteriaReport check_a2(const ProtocolBank& bank, double bound, double alpha, double beta,
                        const GridSpec& grid) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("alpha must lie in (0, 1)");
  if (bank.size() == 0) throw DomainError("empty protocol bank");
  const auto z = a2_grid(bound, grid);

  CriteriaReport report;
  report.alpha = alpha;
  report.beta = beta;
  report.bound_M = bound;
  report.grid_size = z.size();

  double best = std::numeric_limits<double>::infinity();
  std::size_t best_agent = 0;
  std::size_t best_index = 0;
  for (std::size_t i = 0; i < bank.size(); ++i) {
    for (std::size_t k = 0; k < z.size(); ++k) {
      const double r = a2_ratio(bank[i], z[k], alpha);
      if (r < best) {
        best = r;
        best_agent = i;
        best_index = k;
      }
    }
    if (small_argument_exponent(bank[i], alpha) > 1e-12) report.vanishes_at_zero = true;
  }

  // Golden-section search in log|z| between the neighbours of the best point.
  const double u_best = std::abs(z[best_index]);
  const auto it = std::lower_bound(z.begin(), z.end(), u_best);
  const auto pos = static_cast<std::size_t>(it - z.begin());
  double lo = std::log(pos > 0 && z[pos - 1] > 0.0 ? z[pos - 1] : u_best);
  double hi = std::log(pos + 1 < z.size() ? z[pos + 1] : u_best);
  double argmin = u_best;
  const auto& f = bank[best_agent];
  const auto ratio_at = [&](double t) { return a2_ratio(f, std::exp(t), alpha); };
  constexpr double kInvPhi = 0.6180339887498949;
  double x1 = hi - kInvPhi * (hi - lo);
  double x2 = lo + kInvPhi * (hi - lo);
  double r1 = ratio_at(x1);
  double r2 = ratio_at(x2);
  for (int iter = 0; iter < 80 && hi - lo > 1e-14; ++iter) {
    if (r1 < r2) {
      hi = x2;
      x2 = x1;
      r2 = r1;
      x1 = hi - kInvPhi * (hi - lo);
      r1 = ratio_at(x1);
    } else {
      lo = x1;
      x1 = x2;
      r1 = r2;
      x2 = lo + kInvPhi * (hi - lo);
      r2 = ratio_at(x2);
    }
  }
  for (const auto& [x, r] : {std::pair{x1, r1}, std::pair{x2, r2}}) {
    if (r < best) {
      best = r;
      argmin = std::exp(x);
    }
  }

  report.empirical_ratio_min = best;
  report.argmin = argmin;
  report.a2_pass = beta > 0.0 && best >= beta && !report.vanishes_at_zero;
  return report;
}

ClaimConstants claim1_constants(const ProtocolBank& bank, double bound) {
  if (!bank.all_of_kind<PowerLinear>()) {
    throw WrongProtocolKind("power-linear constants need an all power-linear bank");
  }
  if (!(bound > 0.0)) throw DomainError("bound must be positive");
  double c = 0.0;
  for (const auto& f : bank) c = std::max(c, std::get<PowerLinear>(f.kind()).c);
  const double alpha = 2.0 * c / (1.0 + c);

  double beta = std::numeric_limits<double>::infinity();
  for (const auto& f : bank) {
    const auto& p = std::get<PowerLinear>(f.kind());
    const double e1 = 2.0 * p.c - 2.0 * c * (1.0 + p.c) / (1.0 + c);
    const double e2 = 2.0 * p.c - 4.0 * c / (1.0 + c);
    const double num = p.a * p.a * std::min(std::pow(bound, e1), std::pow(bound, e2));
    const double den =
        2.0 * std::max(std::pow(p.a / (1.0 + p.c), alpha), std::pow(p.b / 2.0, alpha));
    beta = std::min(beta, num / den);
  }
  return {alpha, beta, std::nullopt, std::nullopt, std::nullopt};
}

ClaimConstants claim2_constants(const ProtocolBank& bank, double bound, const GridSpec& grid) {
  if (!bank.all_of_kind<LogPower>()) {
    throw WrongProtocolKind("log-power constants need an all log-power bank");
  }
  if (!(bound > 0.0)) throw DomainError("bound must be positive");
  double c = 0.0;
  for (const auto& f : bank) c = std::max(c, std::get<LogPower>(f.kind()).c);
  const double alpha = 4.0 * c / (2.0 + c);

  double beta1 = std::numeric_limits<double>::infinity();
  double beta2 = std::numeric_limits<double>::infinity();
  for (const auto& f : bank) {
    const auto& p = std::get<LogPower>(f.kind());
    const double e1 = 2.0 * p.c - 4.0 * c * (1.0 + p.c) / (2.0 + c);
    const double e2 = 2.0 * p.c - 2.0 * c * (2.0 + p.c) / (2.0 + c);
    beta1 = std::min(beta1, p.a * p.a * std::pow(bound, e1) /
                                (2.0 * std::pow(p.a / (1.0 + p.c), alpha)));
    beta2 = std::min(beta2, p.a * p.a * std::pow(bound, e2) /
                                (2.0 * std::pow(2.0 * p.a / (2.0 + p.c), alpha)));
  }
  const double beta = std::min(beta1, beta2);
  const auto scan = check_a2(bank, bound, alpha, beta, grid);
  return {alpha, beta, beta1, beta2, scan.empirical_ratio_min};
}

ConstantsChoice select_constants(const ProtocolBank& bank, double bound, const GridSpec& grid) {
  ConstantsChoice choice;
  if (bank.all_of_kind<PowerLinear>()) {
    const auto k = claim1_constants(bank, bound);
    choice.alpha = k.alpha;
    choice.beta_closed_form = k.beta;
  } else if (bank.all_of_kind<LogPower>()) {
    const auto k = claim2_constants(bank, bound, grid);
    choice.alpha = k.alpha;
    choice.beta_closed_form = k.beta;
  } else {
    double alpha = 0.0;
    for (const auto& f : bank) {
      if (const auto* p = std::get_if<PowerLinear>(&f.kind())) {
        alpha = std::max(alpha, 2.0 * p->c / (1.0 + p->c));
      } else if (const auto* q = std::get_if<LogPower>(&f.kind())) {
        alpha = std::max(alpha, 4.0 * q->c / (2.0 + q->c));
      }
    }
    choice.alpha = alpha > 0.0 ? alpha : 0.5;
  }

  const auto scan = check_a2(bank, bound, choice.alpha, 0.0, grid);
  choice.beta_empirical = scan.empirical_ratio_min;
  // the printed log-power constant is reported but never trusted
  const bool trusted = bank.all_of_kind<PowerLinear>();
  if (trusted && *choice.beta_closed_form <= choice.beta_empirical) {
    choice.beta = *choice.beta_closed_form;
    choice.source = BetaSource::ClosedForm;
  } else {
    choice.beta = choice.beta_empirical;
    choice.source = BetaSource::Empirical;
  }
  choice.a2_pass = choice.beta > 0.0 && !scan.vanishes_at_zero;
  return choice;
}

}  // namespace fincon
