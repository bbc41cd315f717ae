#include "fincon/protocols.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <map>
#include <string>

#include "fincon/errors.hpp"

namespace fincon {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

double sign(double z) { return (z > 0.0) - (z < 0.0); }

// sign(z)|z|^p, odd by construction
double signed_power(double z, double p) { return sign(z) * std::pow(std::abs(z), p); }

bool finite_positive(double v) { return std::isfinite(v) && v > 0.0; }

}  // namespace

ProtocolFunction ProtocolFunction::linear(double k) {
  if (!finite_positive(k)) throw InvalidProtocol("linear: k must be positive");
  return ProtocolFunction(Linear{k});
}

ProtocolFunction ProtocolFunction::power_linear(double a, double b, double c) {
  if (!finite_positive(a)) throw InvalidProtocol("powerlinear: a must be positive");
  if (!std::isfinite(b) || b < 0.0) throw InvalidProtocol("powerlinear: b must be nonnegative");
  if (!(c > 0.0 && c < 1.0)) throw InvalidProtocol("powerlinear: c must lie in (0, 1)");
  return ProtocolFunction(PowerLinear{a, b, c});
}

ProtocolFunction ProtocolFunction::log_power(double a, double c) {
  if (!finite_positive(a)) throw InvalidProtocol("logpower: a must be positive");
  if (!(c > 0.0 && c < 2.0 / 3.0)) throw InvalidProtocol("logpower: c must lie in (0, 2/3)");
  return ProtocolFunction(LogPower{a, c});
}

ProtocolFunction ProtocolFunction::from_kind(const Kind& kind) {
  return std::visit(Overloaded{
                        [](const Linear& p) { return linear(p.k); },
                        [](const PowerLinear& p) { return power_linear(p.a, p.b, p.c); },
                        [](const LogPower& p) { return log_power(p.a, p.c); },
                    },
                    kind);
}

std::string ProtocolFunction::name() const {
  return std::visit(Overloaded{
                        [](const Linear&) { return std::string("linear"); },
                        [](const PowerLinear&) { return std::string("powerlinear"); },
                        [](const LogPower&) { return std::string("logpower"); },
                    },
                    kind_);
}

double ProtocolFunction::eval(double z) const {
  return std::visit(Overloaded{
                        [z](const Linear& p) { return p.k * z; },
                        [z](const PowerLinear& p) { return p.a * signed_power(z, p.c) + p.b * z; },
                        [z](const LogPower& p) {
                          const double u = std::abs(z);
                          if (u == 0.0) return 0.0;
                          if (u <= kLogPowerBreak) return -p.a * signed_power(z, p.c) * std::log(u);
                          return p.a * signed_power(z, p.c);
                        },
                    },
                    kind_);
}

double ProtocolFunction::antiderivative(double z) const {
  const double u = std::abs(z);
  return std::visit(
      Overloaded{
          [u](const Linear& p) { return 0.5 * p.k * u * u; },
          [u](const PowerLinear& p) {
            return p.a * std::pow(u, 1.0 + p.c) / (1.0 + p.c) + 0.5 * p.b * u * u;
          },
          // -a s^c ln s integrates to a s^{c+1} (1/(c+1)^2 - ln s/(c+1)).
          [u](const LogPower& p) {
            if (u == 0.0) return 0.0;
            const double e1 = p.c + 1.0;
            const auto inner = [&](double s) {
              return p.a * std::pow(s, e1) * (1.0 / (e1 * e1) - std::log(s) / e1);
            };
            if (u <= kLogPowerBreak) return inner(u);
            return inner(kLogPowerBreak) +
                   p.a * (std::pow(u, e1) - std::pow(kLogPowerBreak, e1)) / e1;
          },
      },
      kind_);
}

ProtocolBank ProtocolBank::uniform(const ProtocolFunction& f, std::size_t n) {
  return ProtocolBank(std::vector<ProtocolFunction>(n, f));
}

ProtocolBank ProtocolBank::subset(const std::vector<std::size_t>& agents) const {
  std::vector<ProtocolFunction> out;
  out.reserve(agents.size());
  for (auto i : agents) out.push_back(functions_.at(i));
  return ProtocolBank(std::move(out));
}

// ---------------------------------------------------------------------------
// Spec strings

namespace {

class SpecReader {
public:
  explicit SpecReader(std::string_view text) : text_(text) {}

  void skip_space() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  bool at_end() {
    skip_space();
    return pos_ >= text_.size();
  }

  std::string identifier() {
    skip_space();
    const auto start = pos_;
    while (pos_ < text_.size() &&
           (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_')) {
      ++pos_;
    }
    if (start == pos_) fail("expected a name");
    return std::string(text_.substr(start, pos_ - start));
  }

  void expect(char ch) {
    skip_space();
    if (pos_ >= text_.size() || text_[pos_] != ch) fail(std::string("expected '") + ch + "'");
    ++pos_;
  }

  bool accept(char ch) {
    skip_space();
    if (pos_ < text_.size() && text_[pos_] == ch) {
      ++pos_;
      return true;
    }
    return false;
  }

  double number() {
    skip_space();
    double value = 0.0;
    const char* first = text_.data() + pos_;
    const char* last = text_.data() + text_.size();
    if (first != last && *first == '+') ++first;
    const auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc() || ptr == first) fail("expected a number");
    pos_ = static_cast<std::size_t>(ptr - text_.data());
    return value;
  }

  [[noreturn]] void fail(const std::string& what) const {
    throw ParseError("protocol spec '" + std::string(text_) + "': " + what + " at column " +
                     std::to_string(pos_ + 1));
  }

private:
  std::string_view text_;
  std::size_t pos_ = 0;
};

std::string format_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

ProtocolFunction parse_protocol_spec(std::string_view text) {
  SpecReader reader(text);
  const auto kind = reader.identifier();
  std::map<std::string, double> params;
  reader.expect('{');
  if (!reader.accept('}')) {
    do {
      const auto key = reader.identifier();
      reader.expect('=');
      if (!params.emplace(key, reader.number()).second) reader.fail("duplicate key '" + key + "'");
    } while (reader.accept(','));
    reader.expect('}');
  }
  if (!reader.at_end()) reader.fail("trailing characters");

  const auto take = [&](const char* key) {
    const auto it = params.find(key);
    if (it == params.end()) reader.fail(std::string("missing key '") + key + "'");
    const double v = it->second;
    params.erase(it);
    return v;
  };
  const auto finish = [&](ProtocolFunction f) {
    if (!params.empty()) reader.fail("unknown key '" + params.begin()->first + "'");
    return f;
  };

  if (kind == "linear") {
    const double k = take("k");
    return finish(ProtocolFunction::linear(k));
  }
  if (kind == "powerlinear") {
    const double a = take("a");
    const double b = take("b");
    const double c = take("c");
    return finish(ProtocolFunction::power_linear(a, b, c));
  }
  if (kind == "logpower") {
    const double a = take("a");
    const double c = take("c");
    return finish(ProtocolFunction::log_power(a, c));
  }
  reader.fail("unknown protocol kind '" + kind + "'");
}

std::string to_spec_string(const ProtocolFunction& f) {
  return std::visit(
      Overloaded{
          [](const Linear& p) { return "linear{k=" + format_number(p.k) + "}"; },
          [](const PowerLinear& p) {
            return "powerlinear{a=" + format_number(p.a) + ", b=" + format_number(p.b) +
                   ", c=" + format_number(p.c) + "}";
          },
          [](const LogPower& p) {
            return "logpower{a=" + format_number(p.a) + ", c=" + format_number(p.c) + "}";
          },
      },
      f.kind());
}

}  // namespace fincon
