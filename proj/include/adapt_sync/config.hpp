#pragma once

// Scenario configuration: strict JSON parsing with line-anchored errors,
// `key=value` overrides and the built-in presets. Requires nlohmann/json
// (json.hpp) on the include path.

#include "adapt_sync/transmission.hpp"

#include <json.hpp>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace adapt_sync {

using json = nlohmann::json;

inline constexpr int kSchemaVersion = 1;

/// Invalid configuration; `line` is 1-based when the offending key could be
/// located in the source text.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& what, std::string pointer, std::optional<int> line)
      : std::runtime_error(what), pointer_(std::move(pointer)), line_(line) {}
  const std::string& pointer() const noexcept { return pointer_; }
  std::optional<int> line() const noexcept { return line_; }

 private:
  std::string pointer_;
  std::optional<int> line_;
};

/// Maps JSON pointers of a (syntactically valid) document to the line on
/// which the key or array element starts.
class LineIndex {
 public:
  LineIndex() = default;
  explicit LineIndex(std::string_view text) : text_(text) {
    try {
      value("");
    } catch (const std::out_of_range&) {
      // Truncated text: keep whatever was indexed.
    }
    text_ = {};
  }

  /// Line of `pointer`, or of its nearest indexed ancestor.
  std::optional<int> line(std::string pointer) const {
    while (true) {
      if (auto it = lines_.find(pointer); it != lines_.end()) return it->second;
      if (pointer.empty()) return std::nullopt;
      pointer.erase(pointer.rfind('/'));
    }
  }

  static std::string escape(const std::string& token) {
    std::string out;
    for (char ch : token) {
      if (ch == '~') out += "~0";
      else if (ch == '/') out += "~1";
      else out += ch;
    }
    return out;
  }

 private:
  char peek() const { return text_.at(pos_); }

  void ws() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) {
      if (text_[pos_] == '\n') ++line_;
      ++pos_;
    }
  }

  std::string string() {
    std::string out;
    ++pos_;  // opening quote
    while (peek() != '"') {
      if (peek() == '\\') {
        out += text_.at(pos_ + 1);
        pos_ += 2;
      } else {
        out += text_[pos_++];
      }
    }
    ++pos_;
    return out;
  }

  void value(const std::string& ptr) {
    ws();
    lines_.emplace(ptr, line_);
    const char ch = peek();
    if (ch == '{') {
      ++pos_;
      ws();
      if (peek() == '}') {
        ++pos_;
        return;
      }
      while (true) {
        ws();
        const int key_line = line_;
        const std::string child = ptr + "/" + escape(string());
        ws();
        ++pos_;  // ':'
        value(child);
        lines_[child] = key_line;
        ws();
        if (text_.at(pos_++) == '}') return;
      }
    } else if (ch == '[') {
      ++pos_;
      ws();
      if (peek() == ']') {
        ++pos_;
        return;
      }
      for (std::size_t i = 0;; ++i) {
        value(ptr + "/" + std::to_string(i));
        ws();
        if (text_.at(pos_++) == ']') return;
      }
    } else if (ch == '"') {
      string();
    } else {
      while (pos_ < text_.size() && text_[pos_] != ',' && text_[pos_] != '}' && text_[pos_] != ']' &&
             !std::isspace(static_cast<unsigned char>(text_[pos_])))
        ++pos_;
    }
  }

  std::string_view text_;
  std::size_t pos_ = 0;
  int line_ = 1;
  std::map<std::string, int> lines_;
};

/// A parsed scenario plus the settings that only the runner needs.
struct ScenarioSpec {
  ScenarioConfig config;
  std::vector<std::string> record;  // empty: every channel
  std::optional<double> runtime_budget;
  json source;
};

struct ConfigFile {
  int schema_version = kSchemaVersion;
  std::vector<ScenarioSpec> scenarios;
};

namespace config_detail {

struct Context {
  const LineIndex* index = nullptr;
  std::string origin = "config";
  std::set<std::string> overridden;

  [[noreturn]] void fail(const std::string& pointer, const std::string& msg) const {
    std::optional<int> line = index ? index->line(pointer) : std::nullopt;
    std::ostringstream os;
    os << origin;
    if (line) os << ":" << *line;
    os << ": " << (pointer.empty() ? "/" : pointer) << ": " << msg;
    for (const auto& o : overridden)
      if (pointer.rfind(o, 0) == 0) {
        os << " (value set by override)";
        break;
      }
    throw ConfigError(os.str(), pointer, line);
  }
};

/// Strict view of one JSON object: every key must be consumed.
class Obj {
 public:
  Obj(const json& j, std::string ptr, const Context& ctx) : j_(j), ptr_(std::move(ptr)), ctx_(ctx) {
    if (!j_.is_object()) ctx_.fail(ptr_, "expected an object");
  }

  const std::string& pointer() const { return ptr_; }
  std::string child(const std::string& key) const { return ptr_ + "/" + LineIndex::escape(key); }
  bool has(const std::string& key) const { return j_.contains(key); }

  const json& get(const std::string& key) {
    used_.insert(key);
    if (!j_.contains(key)) {
      for (auto it = j_.begin(); it != j_.end(); ++it)
        if (!used_.count(it.key()) && edit_distance(it.key(), key) <= 2)
          ctx_.fail(child(it.key()), "unknown key '" + it.key() + "' (did you mean '" + key + "'?)");
      ctx_.fail(ptr_, "missing required key '" + key + "'");
    }
    return j_.at(key);
  }

  double number(const std::string& key) {
    const json& v = get(key);
    if (!v.is_number()) ctx_.fail(child(key), "expected a number");
    const double d = v.get<double>();
    if (!std::isfinite(d)) ctx_.fail(child(key), "expected a finite number");
    return d;
  }

  double number(const std::string& key, double fallback) { return has(key) ? number(key) : fallback; }

  double positive(const std::string& key, std::optional<double> fallback = std::nullopt) {
    if (!has(key) && fallback) return *fallback;
    const double d = number(key);
    if (!(d > 0.0)) ctx_.fail(child(key), "'" + key + "' must be > 0");
    return d;
  }

  double non_negative(const std::string& key, double fallback) {
    if (!has(key)) return fallback;
    const double d = number(key);
    if (d < 0.0) ctx_.fail(child(key), "'" + key + "' must be >= 0");
    return d;
  }

  bool boolean(const std::string& key, bool fallback) {
    if (!has(key)) return fallback;
    const json& v = get(key);
    if (!v.is_boolean()) ctx_.fail(child(key), "expected true or false");
    return v.get<bool>();
  }

  std::string string(const std::string& key) {
    const json& v = get(key);
    if (!v.is_string()) ctx_.fail(child(key), "expected a string");
    return v.get<std::string>();
  }

  std::string choice(const std::string& key, const std::vector<std::string>& allowed,
                     std::optional<std::string> fallback = std::nullopt) {
    if (!has(key) && fallback) return *fallback;
    const std::string s = string(key);
    for (const auto& a : allowed)
      if (a == s) return s;
    std::string list;
    for (const auto& a : allowed) list += (list.empty() ? "" : ", ") + a;
    ctx_.fail(child(key), "'" + s + "' is not one of: " + list);
  }

  Vector vector(const std::string& key, std::optional<Eigen::Index> size = std::nullopt) {
    const json& v = get(key);
    return to_vector(v, child(key), size);
  }

  Vector to_vector(const json& v, const std::string& ptr, std::optional<Eigen::Index> size) const {
    if (!v.is_array()) ctx_.fail(ptr, "expected an array of numbers");
    Vector out(static_cast<Eigen::Index>(v.size()));
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (!v[i].is_number()) ctx_.fail(ptr + "/" + std::to_string(i), "expected a number");
      out[static_cast<Eigen::Index>(i)] = v[i].get<double>();
    }
    if (size && out.size() != *size)
      ctx_.fail(ptr, "expected " + std::to_string(*size) + " entries, got " + std::to_string(out.size()));
    return out;
  }

  Matrix matrix(const std::string& key) {
    const json& v = get(key);
    const std::string ptr = child(key);
    if (!v.is_array() || v.empty()) ctx_.fail(ptr, "expected a non-empty array of rows");
    const auto rows = static_cast<Eigen::Index>(v.size());
    Matrix M(rows, rows);
    for (std::size_t i = 0; i < v.size(); ++i) {
      const Vector row = to_vector(v[i], ptr + "/" + std::to_string(i), rows);
      M.row(static_cast<Eigen::Index>(i)) = row.transpose();
    }
    return M;
  }

  const Context& ctx() const { return ctx_; }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!used_.count(it.key())) ctx_.fail(child(it.key()), "unknown key '" + it.key() + "'");
  }

 private:
  static std::size_t edit_distance(const std::string& a, const std::string& b) {
    std::vector<std::size_t> row(b.size() + 1);
    for (std::size_t j = 0; j <= b.size(); ++j) row[j] = j;
    for (std::size_t i = 1; i <= a.size(); ++i) {
      std::size_t diag = row[0];
      row[0] = i;
      for (std::size_t j = 1; j <= b.size(); ++j) {
        const std::size_t up = row[j];
        row[j] = std::min({row[j] + 1, row[j - 1] + 1, diag + (a[i - 1] == b[j - 1] ? 0 : 1)});
        diag = up;
      }
    }
    return row[b.size()];
  }

  const json& j_;
  std::string ptr_;
  const Context& ctx_;
  std::set<std::string> used_;
};

inline Signal parse_signal(const json& j, const std::string& ptr, const Context& ctx) {
  if (j.is_number()) return Signal::constant(j.get<double>());
  Obj o(j, ptr, ctx);
  const std::string kind = o.choice("kind", {"constant", "square", "sine", "piecewise_linear"});
  Signal s;
  try {
    if (kind == "constant") {
      s = Signal::constant(o.number("value"));
    } else if (kind == "square") {
      double period = 0.0;
      if (o.has("symbol_duration") == o.has("period"))
        ctx.fail(ptr, "square signal needs exactly one of 'period' or 'symbol_duration'");
      period = o.has("period") ? o.positive("period") : 2.0 * o.positive("symbol_duration");
      s = Signal::square_wave(o.number("amplitude"), period, o.number("offset", 0.0), o.number("duty", 0.5),
                              o.number("phase", 0.0));
    } else if (kind == "sine") {
      if (o.has("frequency") == o.has("period"))
        ctx.fail(ptr, "sine signal needs exactly one of 'period' or 'frequency' (rad per time unit)");
      const double period =
          o.has("period") ? o.positive("period") : 2.0 * std::numbers::pi / o.positive("frequency");
      s = Signal::sine(o.number("amplitude"), period, o.number("offset", 0.0), o.number("phase", 0.0));
    } else {
      const json& knots = o.get("knots");
      if (!knots.is_array()) ctx.fail(o.child("knots"), "expected an array of [t, value] pairs");
      std::vector<std::pair<double, double>> kv;
      for (std::size_t i = 0; i < knots.size(); ++i) {
        const auto& k = knots[i];
        if (!k.is_array() || k.size() != 2 || !k[0].is_number() || !k[1].is_number())
          ctx.fail(o.child("knots") + "/" + std::to_string(i), "expected [t, value]");
        kv.emplace_back(k[0].get<double>(), k[1].get<double>());
      }
      s = Signal::piecewise_linear(std::move(kv));
    }
  } catch (const std::invalid_argument& e) {
    ctx.fail(ptr, e.what());
  }
  o.finish();
  return s;
}

/// Scalar nonlinearity term for phi0/phi: a number is a constant; objects
/// are {"kind": "constant"|"signal"|"output"|"sin_output", ...}.
using Term = std::function<double(double t, double y)>;

inline Term parse_term(const json& j, const std::string& ptr, const Context& ctx) {
  if (j.is_number()) {
    const double v = j.get<double>();
    return [v](double, double) { return v; };
  }
  Obj o(j, ptr, ctx);
  const std::string kind = o.choice("kind", {"constant", "signal", "output", "sin_output"});
  Term term;
  if (kind == "constant") {
    const double v = o.number("value");
    term = [v](double, double) { return v; };
  } else if (kind == "signal") {
    Signal s = parse_signal(o.get("signal"), o.child("signal"), ctx);
    term = [s](double t, double) { return s(t); };
  } else if (kind == "output") {
    const double gain = o.number("gain", 1.0);
    const double power = o.number("power", 1.0);
    if (power != std::floor(power) || power < 0.0) ctx.fail(o.child("power"), "power must be a non-negative integer");
    term = [gain, p = static_cast<int>(power)](double, double y) { return gain * std::pow(y, p); };
  } else {
    const double gain = o.number("gain", 1.0);
    term = [gain](double, double y) { return gain * std::sin(y); };
  }
  o.finish();
  return term;
}

inline OutputMap parse_terms(const json& j, const std::string& ptr, const Context& ctx,
                             std::optional<std::size_t> size) {
  if (!j.is_array()) ctx.fail(ptr, "expected an array of terms");
  if (size && j.size() != *size)
    ctx.fail(ptr, "expected " + std::to_string(*size) + " terms, got " + std::to_string(j.size()));
  std::vector<Term> terms;
  for (std::size_t i = 0; i < j.size(); ++i) terms.push_back(parse_term(j[i], ptr + "/" + std::to_string(i), ctx));
  return [terms](double t, double y) {
    Vector v(static_cast<Eigen::Index>(terms.size()));
    for (std::size_t i = 0; i < terms.size(); ++i) v[static_cast<Eigen::Index>(i)] = terms[i](t, y);
    return v;
  };
}

struct PlantParse {
  MasterSystem plant;
  bool lorenz = false;
  double sigma = 0.0, beta = 0.0, r = 0.0;
  double theta_sup = 0.0;
};

inline PlantParse parse_plant(const json& j, const std::string& ptr, const Context& ctx,
                              const std::optional<Signal>& message, const std::string& message_ptr) {
  Obj o(j, ptr, ctx);
  const std::string type = o.choice("type", {"lorenz", "regressor"});
  PlantParse out;
  if (type == "lorenz") {
    out.lorenz = true;
    out.sigma = o.positive("sigma");
    out.beta = o.positive("beta");
    out.r = o.positive("r");
    if (!message) ctx.fail(message_ptr, "a Lorenz scenario needs a 'message' signal");
    out.plant = lorenz_message_plant(out.sigma, out.beta, out.r, *message);
    out.theta_sup = message->sup_norm();
  } else {
    RegressorPlant p;
    p.A = o.matrix("A");
    const Eigen::Index n = p.A.rows();
    p.b = o.vector("b", n);
    p.c = o.vector("c", n);
    if (o.has("phi0")) p.phi0 = parse_terms(o.get("phi0"), o.child("phi0"), ctx, static_cast<std::size_t>(n));
    else p.phi0 = [n](double, double) { return Vector::Zero(n).eval(); };
    p.phi = parse_terms(o.get("phi"), o.child("phi"), ctx, std::nullopt);
    const Eigen::Index m = p.phi(0.0, 0.0).size();
    if (m < 1) ctx.fail(o.child("phi"), "need at least one regressor term");
    if (message) {
      if (o.has("theta")) ctx.fail(o.child("theta"), "give either plant.theta or a message, not both");
      if (m != 1) ctx.fail(message_ptr, "a message needs a single-parameter plant (m = 1)");
      p.theta = [s = *message](double t) { return Vector::Constant(1, s(t)); };
      out.theta_sup = message->sup_norm();
    } else {
      const Vector theta = o.vector("theta", m);
      p.theta = [theta](double) { return theta; };
      out.theta_sup = theta.norm();
    }
    out.plant = std::move(p);
  }
  o.finish();
  return out;
}

inline Channel parse_channel(const json* j, const std::string& ptr, const Context& ctx) {
  Channel ch;
  if (!j) return ch;
  Obj o(*j, ptr, ctx);
  ch.xi_max = o.non_negative("xi_max", 0.0);
  const std::string dist = o.choice("distribution", {"uniform", "truncated_gaussian", "zero"}, std::string("uniform"));
  ch.distribution = dist == "uniform"              ? NoiseDistribution::uniform
                    : dist == "truncated_gaussian" ? NoiseDistribution::truncated_gaussian
                                                   : NoiseDistribution::zero;
  if (o.has("seed")) {
    const json& s = o.get("seed");
    if (!s.is_number_integer() || (s.is_number_integer() && !s.is_number_unsigned() && s.get<std::int64_t>() < 0))
      ctx.fail(o.child("seed"), "seed must be a non-negative integer");
    ch.seed = s.get<std::uint64_t>();
  } else if (!ch.noiseless()) {
    ctx.fail(ptr, "a noisy channel requires an explicit 'seed'");
  }
  o.finish();
  return ch;
}

}  // namespace config_detail

/// Parses one scenario object.
inline ScenarioSpec parse_scenario(const json& j, const std::string& ptr, const config_detail::Context& ctx) {
  using namespace config_detail;
  Obj o(j, ptr, ctx);
  ScenarioSpec spec;
  spec.source = j;
  ScenarioConfig& cfg = spec.config;
  cfg.name = o.string("name");
  if (cfg.name.empty() || cfg.name.find_first_of("/\\") != std::string::npos)
    ctx.fail(o.child("name"), "name must be non-empty and contain no path separators");

  std::optional<Signal> message;
  if (o.has("message")) message = parse_signal(o.get("message"), o.child("message"), ctx);
  cfg.message = message;
  const PlantParse pp = parse_plant(o.get("plant"), o.child("plant"), ctx, message, o.child("message"));
  cfg.plant = pp.plant;
  const Eigen::Index n = std::visit([](const auto& p) { return p.n(); }, cfg.plant);
  const Eigen::Index m = std::visit([](const auto& p) { return p.m(); }, cfg.plant);

  cfg.channel = parse_channel(o.has("channel") ? &o.get("channel") : nullptr, o.child("channel"), ctx);

  // Observer.
  {
    const std::string optr = o.child("observer");
    Obj ob(o.get("observer"), optr, ctx);
    const std::string scheme = ob.choice("scheme", {"ae", "hot", "sd"});
    std::optional<double> theta_star;
    if (ob.has("theta_star")) {
      const json& ts = ob.get("theta_star");
      if (ts.is_string() && ts.get<std::string>() == "auto") {
        if (!(pp.theta_sup > 0.0)) ctx.fail(ob.child("theta_star"), "'auto' needs a nonzero true parameter");
        theta_star = 1.1 * pp.theta_sup;
      } else {
        theta_star = ob.positive("theta_star");
      }
    }
    auto gamma = [&] {
      const double g = ob.number("gamma");
      if (!(g > 0.0)) ctx.fail(ob.child("gamma"), "adaptation gain gamma must be > 0");
      return g;
    };
    try {
      if (scheme == "sd") {
        const std::string form = ob.choice("filters", {"general", "as-printed"}, std::string("general"));
        const auto lf = form == "general" ? LorenzFilterForm::general : LorenzFilterForm::as_printed;
        const double g = gamma();
        if (pp.lorenz) {
          if (ob.has("k")) ctx.fail(ob.child("k"), "the Lorenz observer uses the fixed gain k = (0, sigma, 0)");
          cfg.observer = make_lorenz_observer(pp.sigma, pp.beta, pp.r, g, theta_star, lf);
        } else {
          if (lf != LorenzFilterForm::general) ctx.fail(ob.child("filters"), "'as-printed' applies to Lorenz only");
          const Vector k = ob.vector("k", n);
          auto sdp = as_state_dependent(std::get<RegressorPlant>(cfg.plant));
          cfg.observer = SdObserver(sdp, [k](double) { return k; }, g, theta_star);
        }
      } else {
        if (pp.lorenz) ctx.fail(ob.child("scheme"), "the '" + scheme + "' scheme needs a constant-A plant");
        const Vector k = ob.vector("k", n);
        const auto& rp = std::get<RegressorPlant>(cfg.plant);
        if (scheme == "ae") {
          cfg.observer = AeObserver(rp, k, gamma(), theta_star);
        } else {
          if (theta_star) ctx.fail(ob.child("theta_star"), "the high-order tuner has no robust mode");
          HotOptions hop;
          hop.lambda = ob.positive("lambda", 1.0);
          hop.mu = ob.positive("mu", 1.0);
          hop.alpha_lambda = ob.has("alpha_lambda") ? ob.positive("alpha_lambda") : 0.0;
          hop.tuner_output = ob.choice("tuner_output", {"direct", "derivative"}, std::string("direct")) == "direct"
                                 ? TunerOutput::direct
                                 : TunerOutput::derivative;
          hop.strict = ob.boolean("strict", true);
          cfg.observer = HotObserver(rp, k, hop);
        }
      }
    } catch (const ConfigError&) {
      throw;
    } catch (const std::invalid_argument& e) {
      ctx.fail(optr, e.what());
    }
    ob.finish();
  }

  // Initial conditions.
  cfg.x0 = pp.lorenz ? Vector::Ones(n).eval() : Vector::Zero(n).eval();
  cfg.x_hat0 = Vector::Zero(n);
  cfg.theta_hat0 = Vector::Zero(m);
  if (o.has("initial")) {
    Obj in(o.get("initial"), o.child("initial"), ctx);
    if (in.has("x")) cfg.x0 = in.vector("x", n);
    if (in.has("x_hat")) cfg.x_hat0 = in.vector("x_hat", n);
    if (in.has("theta_hat")) cfg.theta_hat0 = in.vector("theta_hat", m);
    in.finish();
  }

  {
    Obj sim(o.get("simulation"), o.child("simulation"), ctx);
    cfg.t0 = sim.number("t0", 0.0);
    cfg.t_end = sim.number("t_end");
    if (!(cfg.t_end > cfg.t0)) ctx.fail(sim.child("t_end"), "t_end must exceed t0");
    cfg.step = sim.positive("step", 1e-3);
    cfg.guard = sim.positive("guard", 1e6);
    if (sim.has("runtime_budget")) spec.runtime_budget = sim.positive("runtime_budget");
    sim.finish();
  }

  if (o.has("diagnostics")) {
    Obj d(o.get("diagnostics"), o.child("diagnostics"), ctx);
    cfg.diagnostics.disturbance = d.boolean("disturbance", false);
    cfg.diagnostics.auxiliary = d.boolean("auxiliary", false);
    d.finish();
  }

  if (o.has("metrics")) {
    Obj mt(o.get("metrics"), o.child("metrics"), ctx);
    cfg.metrics.band_fraction = mt.positive("band_fraction", 0.05);
    cfg.metrics.post_transient = mt.non_negative("post_transient", 0.0);
    const double ds = mt.non_negative("discard_symbols", 1.0);
    if (ds != std::floor(ds)) ctx.fail(mt.child("discard_symbols"), "discard_symbols must be an integer");
    cfg.metrics.discard_symbols = static_cast<std::size_t>(ds);
    cfg.metrics.pe_window = mt.positive("pe_window", 5.0);
    mt.finish();
  }

  if (o.has("record")) {
    const json& r = o.get("record");
    if (!r.is_array()) ctx.fail(o.child("record"), "expected an array of channel names");
    for (std::size_t i = 0; i < r.size(); ++i) {
      if (!r[i].is_string()) ctx.fail(o.child("record") + "/" + std::to_string(i), "expected a channel name");
      spec.record.push_back(r[i].get<std::string>());
    }
  }
  o.finish();

  try {
    validate(cfg);
  } catch (const std::invalid_argument& e) {
    ctx.fail(ptr, e.what());
  }
  return spec;
}

/// Applies `key=value` to every scenario (or to one, when the key starts
/// with `scenarios.<i>.`). The value is parsed as JSON when possible and
/// taken as a string otherwise. Returns the affected pointers.
inline std::vector<std::string> apply_override(json& doc, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0)
    throw ConfigError("override '" + assignment + "': expected key=value", "", std::nullopt);
  const std::string key = assignment.substr(0, eq);
  const std::string raw = assignment.substr(eq + 1);
  json value = json::parse(raw, nullptr, false);
  if (value.is_discarded()) value = raw;

  std::vector<std::string> tokens;
  std::stringstream ss(key);
  for (std::string tok; std::getline(ss, tok, '.');) {
    if (tok.empty()) throw ConfigError("override '" + assignment + "': empty path segment", "", std::nullopt);
    tokens.push_back(tok);
  }
  std::vector<std::string> bases;
  if (tokens.front() == "scenarios" || tokens.front() == "schema_version") {
    bases.push_back("");
  } else {
    if (!doc.contains("scenarios") || !doc["scenarios"].is_array())
      throw ConfigError("override '" + assignment + "': document has no scenarios", "/scenarios", std::nullopt);
    for (std::size_t i = 0; i < doc["scenarios"].size(); ++i) bases.push_back("/scenarios/" + std::to_string(i));
  }
  std::vector<std::string> out;
  for (const auto& base : bases) {
    std::string ptr = base;
    for (const auto& t : tokens) ptr += "/" + LineIndex::escape(t);
    json::json_pointer jp(ptr);
    try {
      doc[jp] = value;
    } catch (const json::exception& e) {
      throw ConfigError("override '" + assignment + "': " + e.what(), ptr, std::nullopt);
    }
    out.push_back(ptr);
  }
  return out;
}

/// Parses a configuration document from text.
inline ConfigFile parse_config(const std::string& text, const std::vector<std::string>& overrides = {},
                               const std::string& origin = "config") {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    int line = 1;
    for (std::size_t i = 0; i + 1 < e.byte && i < text.size(); ++i) line += text[i] == '\n' ? 1 : 0;
    throw ConfigError(origin + ":" + std::to_string(line) + ": syntax error: " + e.what(), "", line);
  }
  const LineIndex index(text);
  config_detail::Context ctx;
  ctx.index = &index;
  ctx.origin = origin;
  for (const auto& ov : overrides)
    for (auto& p : apply_override(doc, ov)) ctx.overridden.insert(p);

  config_detail::Obj top(doc, "", ctx);
  ConfigFile out;
  const json& v = top.get("schema_version");
  if (!v.is_number_integer() || v.get<int>() != kSchemaVersion)
    ctx.fail("/schema_version", "unsupported schema_version (expected " + std::to_string(kSchemaVersion) + ")");
  out.schema_version = v.get<int>();
  const json& list = top.get("scenarios");
  if (!list.is_array() || list.empty()) ctx.fail("/scenarios", "expected a non-empty array of scenarios");
  std::set<std::string> names;
  for (std::size_t i = 0; i < list.size(); ++i) {
    const std::string ptr = "/scenarios/" + std::to_string(i);
    out.scenarios.push_back(parse_scenario(list[i], ptr, ctx));
    if (!names.insert(out.scenarios.back().config.name).second) ctx.fail(ptr + "/name", "duplicate scenario name");
  }
  top.finish();
  return out;
}

inline ConfigFile load_config(const std::string& path, const std::vector<std::string>& overrides = {}) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path + ": cannot open config file", "", std::nullopt);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), overrides, path);
}

// ---------------------------------------------------------------------------
// Presets

struct Preset {
  std::string name;
  std::string description;
  std::string text;  // full config document
};

namespace config_detail {

inline std::string lorenz_scenario(const std::string& name, const std::string& message, const std::string& channel,
                                   const std::string& extra_observer, double t_end, const std::string& diagnostics,
                                   double budget) {
  return R"({
      "name": ")" + name + R"(",
      "plant": {"type": "lorenz", "sigma": 10, "beta": 2.6666666666666665, "r": 97},
      "message": )" + message + R"(,
      "channel": )" + channel + R"(,
      "observer": {"scheme": "sd", "gamma": 0.45)" + extra_observer + R"(},
      "initial": {"x": [1, 1, 1], "x_hat": [0, 0, 0], "theta_hat": [0]},
      "simulation": {"t_end": )" + std::to_string(t_end) + R"(, "step": 0.001, "runtime_budget": )" +
         std::to_string(budget) + R"(},
      "diagnostics": )" + diagnostics + R"(,
      "record": ["y", "y_r", "e", "e_hat", "vartheta", "vartheta_hat", "eps1", "eps2", "eps3", "V"]
    })";
}

inline std::string wrap(const std::string& scenario) {
  return "{\n  \"schema_version\": 1,\n  \"scenarios\": [\n    " + scenario + "\n  ]\n}\n";
}

}  // namespace config_detail

inline const std::vector<Preset>& presets() {
  using namespace config_detail;
  static const std::vector<Preset> list = {
      {"lorenz-square-noiseless",
       "Lorenz master sigma=10, beta=8/3, r=97, gamma=0.45; square-wave message +-0.1, symbol 20, noiseless",
       wrap(lorenz_scenario("lorenz-square-noiseless",
                            R"({"kind": "square", "amplitude": 0.1, "symbol_duration": 20})", R"({"xi_max": 0})", "",
                            200.0, R"({"disturbance": false, "auxiliary": true})", 30.0))},
      {"lorenz-square-noisy",
       "As lorenz-square-noiseless with uniform channel noise xi_max=0.5 and dead zone theta*=auto",
       wrap(lorenz_scenario("lorenz-square-noisy", R"({"kind": "square", "amplitude": 0.1, "symbol_duration": 20})",
                            R"({"xi_max": 0.5, "distribution": "uniform", "seed": 42})",
                            R"(, "theta_star": "auto")", 200.0, R"({"disturbance": true, "auxiliary": true})", 60.0))},
      {"lorenz-analog",
       "Lorenz master with a sinusoidal (analog) message, amplitude 0.1, period 40, noiseless",
       wrap(lorenz_scenario("lorenz-analog", R"({"kind": "sine", "amplitude": 0.1, "period": 40})",
                            R"({"xi_max": 0})", "", 200.0, R"({"disturbance": false, "auxiliary": false})", 30.0))},
      {"hot-synthetic-r2", "High-order tuner on H(p) = 1/(p+1)^2, phi = 10 sin(0.5 t), theta = 2",
       wrap(R"({
      "name": "hot-synthetic-r2",
      "plant": {"type": "regressor", "A": [[-3, 1], [-2, 0]], "b": [0, 1], "c": [1, 0],
                "phi": [{"kind": "signal", "signal": {"kind": "sine", "amplitude": 10, "frequency": 0.5}}],
                "theta": [2]},
      "observer": {"scheme": "hot", "k": [-1, 1], "lambda": 1, "mu": 1},
      "simulation": {"t_end": 100, "step": 0.001, "runtime_budget": 30},
      "diagnostics": {"auxiliary": true}
    })")},
      {"hot-synthetic-r3",
       "High-order tuner on H(p) = 1/(p+1)^3, phi = 10 sin(0.5 t), theta = 2, mu = 2x the stability bound",
       wrap(R"({
      "name": "hot-synthetic-r3",
      "plant": {"type": "regressor", "A": [[-6, 1, 0], [-11, 0, 1], [-6, 0, 0]], "b": [0, 0, 1], "c": [1, 0, 0],
                "phi": [{"kind": "signal", "signal": {"kind": "sine", "amplitude": 10, "frequency": 0.5}}],
                "theta": [2]},
      "observer": {"scheme": "hot", "k": [3, 8, 5], "lambda": 1, "mu": 6},
      "simulation": {"t_end": 100, "step": 0.001, "runtime_budget": 30},
      "diagnostics": {"auxiliary": true}
    })")},
      {"ae-synthetic", "Augmented-error observer, n=2, phi = 3 sin t, theta = 2, gamma = 5, zero initial states",
       wrap(R"({
      "name": "ae-synthetic",
      "plant": {"type": "regressor", "A": [[0, 1], [-2, -3]], "b": [0, 1], "c": [1, 0],
                "phi": [{"kind": "signal", "signal": {"kind": "sine", "amplitude": 3, "frequency": 1}}],
                "theta": [2]},
      "observer": {"scheme": "ae", "k": [1, 0], "gamma": 5},
      "simulation": {"t_end": 100, "step": 0.001, "runtime_budget": 30},
      "diagnostics": {"auxiliary": true, "disturbance": true}
    })")},
  };
  return list;
}

inline const Preset& find_preset(const std::string& name) {
  for (const auto& p : presets())
    if (p.name == name) return p;
  throw ConfigError("unknown preset '" + name + "'", "", std::nullopt);
}

}  // namespace adapt_sync
