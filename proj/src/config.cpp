#include "mmrl/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "mmrl/errors.hpp"

namespace mmrl {

using json = nlohmann::json;

std::string to_string(Algo algo) {
  switch (algo) {
    case Algo::S1: return "s1";
    case Algo::S2: return "s2";
    case Algo::S3: return "s3";
  }
  return "s1";
}

std::string to_string(ScheduleMode mode) {
  switch (mode) {
    case ScheduleMode::Prop4: return "prop4";
    case ScheduleMode::AppB_S1: return "appb_s1";
    case ScheduleMode::S2_Thm6: return "s2_thm6";
    case ScheduleMode::S3_Thm7: return "s3_thm7";
    case ScheduleMode::None: return "none";
  }
  return "appb_s1";
}

std::string to_string(ComparatorMode mode) {
  return mode == ComparatorMode::SameNoise ? "same_noise" : "steady_state";
}

namespace {

// Object view that records which keys were read so leftovers can be rejected.
class Section {
 public:
  Section(const json& node, std::string path) : node_(node), path_(std::move(path)) {
    if (!node_.is_object()) throw ParseError(where() + ": expected an object");
  }

  [[nodiscard]] bool has(const std::string& key) const { return node_.contains(key); }

  const json* find(const std::string& key) {
    seen_.insert(key);
    auto it = node_.find(key);
    return it == node_.end() ? nullptr : &*it;
  }

  template <typename T>
  void read(const std::string& key, T& out) {
    if (const json* v = find(key)) out = convert<T>(*v, key);
  }

  template <typename T>
  void read(const std::string& key, std::optional<T>& out) {
    if (const json* v = find(key)) {
      if (v->is_string() && v->get<std::string>() == "auto") {
        out.reset();
      } else {
        out = convert<T>(*v, key);
      }
    }
  }

  Section child(const std::string& key) {
    const json* v = find(key);
    return Section(*v, path_ + "." + key);
  }

  void reject_unknown() const {
    for (const auto& [key, value] : node_.items()) {
      if (!seen_.count(key)) throw ParseError(where() + ": unknown key '" + key + "'");
    }
  }

  [[nodiscard]] std::string where() const { return path_.empty() ? "config" : path_; }

  template <typename T>
  T convert(const json& v, const std::string& key) const {
    const std::string field = (path_.empty() ? "" : path_ + ".") + key;
    try {
      if constexpr (std::is_same_v<T, double>) {
        if (v.is_string()) {
          const auto s = v.get<std::string>();
          if (s == "inf") return std::numeric_limits<double>::infinity();
          throw ParseError("field '" + field + "': expected a number or \"inf\", got \"" + s + "\"");
        }
        if (!v.is_number()) throw ParseError("field '" + field + "': expected a number");
        return v.get<double>();
      } else if constexpr (std::is_same_v<T, bool>) {
        if (!v.is_boolean()) throw ParseError("field '" + field + "': expected true or false");
        return v.get<bool>();
      } else if constexpr (std::is_integral_v<T>) {
        if (!v.is_number_integer()) throw ParseError("field '" + field + "': expected an integer");
        if constexpr (std::is_unsigned_v<T>) {
          if (v.is_number_unsigned()) return v.get<T>();
          const auto value = v.get<long long>();
          if (value < 0) throw ParseError("field '" + field + "': expected a non-negative integer");
          return static_cast<T>(value);
        } else {
          return v.get<T>();
        }
      } else if constexpr (std::is_same_v<T, std::string>) {
        if (!v.is_string()) throw ParseError("field '" + field + "': expected a string");
        return v.get<std::string>();
      } else {
        if (!v.is_array()) throw ParseError("field '" + field + "': expected a matrix (array of rows)");
        DenseRows rows;
        for (const auto& row : v) {
          if (!row.is_array()) throw ParseError("field '" + field + "': expected a matrix (array of rows)");
          auto& r = rows.emplace_back();
          for (const auto& e : row) {
            if (!e.is_number()) throw ParseError("field '" + field + "': matrix entries must be numbers");
            r.push_back(e.get<double>());
          }
        }
        return rows;
      }
    } catch (const json::exception& e) {
      throw ParseError("field '" + field + "': " + e.what());
    }
  }

 private:
  const json& node_;
  std::string path_;
  std::set<std::string> seen_;
};

Algo parse_algo(const std::string& s) {
  if (s == "s1") return Algo::S1;
  if (s == "s2") return Algo::S2;
  if (s == "s3") return Algo::S3;
  throw ValidationError("algo must be one of s1, s2, s3 (got '" + s + "')");
}

ScheduleMode parse_mode(const std::string& s) {
  if (s == "prop4") return ScheduleMode::Prop4;
  if (s == "appb_s1") return ScheduleMode::AppB_S1;
  if (s == "s2_thm6") return ScheduleMode::S2_Thm6;
  if (s == "s3_thm7") return ScheduleMode::S3_Thm7;
  if (s == "none") return ScheduleMode::None;
  throw ValidationError("schedule.mode must be one of prop4, appb_s1, s2_thm6, s3_thm7, none (got '" +
                        s + "')");
}

ComparatorMode parse_comparator(const std::string& s) {
  if (s == "steady_state") return ComparatorMode::SteadyState;
  if (s == "same_noise") return ComparatorMode::SameNoise;
  throw ValidationError("outputs.comparator_mode must be steady_state or same_noise (got '" + s + "')");
}

ScheduleMode default_mode(Algo algo) {
  switch (algo) {
    case Algo::S1: return ScheduleMode::AppB_S1;
    case Algo::S2: return ScheduleMode::S2_Thm6;
    case Algo::S3: return ScheduleMode::S3_Thm7;
  }
  return ScheduleMode::AppB_S1;
}

SimConfig from_json(const json& doc) {
  Section root(doc, "");
  SimConfig c;
  std::string algo = "s1";
  root.read("algo", algo);
  c.algo = parse_algo(algo);
  c.M = c.algo == Algo::S3 ? 5 : 2;
  c.schedule.mode = default_mode(c.algo);

  root.read("horizon", c.horizon);
  root.read("master_seed", c.master_seed);
  root.read("realizations", c.realizations);
  root.read("eta", c.eta);
  root.read("M", c.M);
  root.read("b", c.b);
  root.read("sigma", c.sigma);
  root.read("threads", c.threads);

  if (root.has("schedule")) {
    auto s = root.child("schedule");
    std::string mode = to_string(c.schedule.mode);
    s.read("mode", mode);
    c.schedule.mode = parse_mode(mode);
    s.read("c_e", c.schedule.c_e);
    s.read("log_count", c.schedule.log_count);
    s.read("epsilon", c.schedule.epsilon);
    s.reject_unknown();
  }
  if (root.has("system")) {
    auto s = root.child("system");
    s.read("preset", c.system.preset);
    s.read("blocks", c.system.blocks);
    s.read("block_dim", c.system.block_dim);
    s.read("diag", c.system.diag);
    s.read("A", c.system.A);
    s.read("B", c.system.B);
    s.reject_unknown();
  }
  if (root.has("candidates") || c.algo != Algo::S3) {
    CandidatesConfig cand;
    if (root.has("candidates")) {
      auto s = root.child("candidates");
      s.read("m", cand.m);
      s.read("abs_err", cand.abs_err);
      s.read("rel_err", cand.rel_err);
      s.read("include_truth", cand.include_truth);
      s.read("per_realization", cand.per_realization);
      s.reject_unknown();
    }
    c.candidates = cand;
  }
  if (root.has("cover")) {
    auto s = root.child("cover");
    CoverConfig cover;
    if (!s.has("epsilon")) throw ValidationError("cover.epsilon is required");
    s.read("epsilon", cover.epsilon);
    s.reject_unknown();
    c.cover = cover;
  }
  if (root.has("param")) {
    auto s = root.child("param");
    ParamConfig param;
    if (s.has("domain")) {
      auto d = s.child("domain");
      d.read("kind", param.domain.kind);
      d.read("abs_err", param.domain.abs_err);
      d.read("rel_err", param.domain.rel_err);
      d.read("radius", param.domain.radius);
      d.reject_unknown();
    }
    s.read("ridge", param.ridge);
    s.read("epsilon", param.epsilon);
    s.read("max_attempts", param.max_attempts);
    s.read("misid_epsilon", param.misid_epsilon);
    s.reject_unknown();
    c.param = param;
  }
  if (root.has("outputs")) {
    auto s = root.child("outputs");
    s.read("per_step_path", c.outputs.per_step_path);
    s.read("summary_path", c.outputs.summary_path);
    std::string comparator = to_string(c.outputs.comparator_mode);
    s.read("comparator_mode", comparator);
    c.outputs.comparator_mode = parse_comparator(comparator);
    s.reject_unknown();
  }
  root.reject_unknown();
  return c;
}

void check(bool ok, const std::string& message) {
  if (!ok) throw ValidationError(message);
}

bool finite_nonneg(double v) { return std::isfinite(v) && v >= 0.0; }

void check_rows(const DenseRows& rows, std::size_t n_rows, std::size_t n_cols, const char* name) {
  check(rows.size() == n_rows && n_rows > 0, std::string("system.") + name + " has wrong row count");
  for (const auto& r : rows) {
    check(r.size() == n_cols, std::string("system.") + name + " has ragged or mis-sized rows");
    for (double v : r) check(std::isfinite(v), std::string("system.") + name + " entries must be finite");
  }
}

json optional_number(const std::optional<double>& v) {
  return v ? json(*v) : json("auto");
}

json number_or_inf(double v) { return std::isinf(v) ? json("inf") : json(v); }

}  // namespace

void validate(const SimConfig& c) {
  check(c.horizon >= 1, "horizon must be ≥ 1");
  check(c.realizations >= 1, "realizations must be ≥ 1");
  check(c.M >= 1, "M must be ≥ 1");
  check(std::isfinite(c.eta) && c.eta > 0.0, "eta must be > 0");
  check(finite_nonneg(c.sigma), "sigma must be ≥ 0");
  check(!std::isnan(c.b) && c.b > 0.0, "b must be > 0 or \"inf\"");
  check(c.threads >= 0, "threads must be ≥ 0");

  if (c.schedule.c_e) check(std::isfinite(*c.schedule.c_e) && *c.schedule.c_e > 0, "schedule.c_e must be > 0");
  if (c.schedule.log_count) check(finite_nonneg(*c.schedule.log_count), "schedule.log_count must be ≥ 0");
  if (c.schedule.epsilon)
    check(std::isfinite(*c.schedule.epsilon) && *c.schedule.epsilon > 0, "schedule.epsilon must be > 0");

  if (c.system.preset == "leaky_kron") {
    check(c.system.blocks >= 1 && c.system.block_dim >= 1, "system.blocks and system.block_dim must be ≥ 1");
    check(std::isfinite(c.system.diag), "system.diag must be finite");
    check(c.system.A.empty() && c.system.B.empty(), "system.A/B are only allowed with preset \"explicit\"");
  } else if (c.system.preset == "explicit") {
    check(!c.system.A.empty() && !c.system.B.empty(), "explicit system requires A and B");
    const std::size_t n = c.system.A.size();
    check_rows(c.system.A, n, n, "A");
    check_rows(c.system.B, n, c.system.B.front().size(), "B");
    check(!c.system.B.front().empty(), "system.B must have at least one column");
  } else {
    throw ValidationError("system.preset must be leaky_kron or explicit (got '" + c.system.preset + "')");
  }

  if (c.algo != Algo::S3) {
    check(c.candidates.has_value(), "candidates section required for s1/s2");
    check(c.candidates->m >= 1, "candidates.m must be ≥ 1");
    check(finite_nonneg(c.candidates->abs_err) && finite_nonneg(c.candidates->rel_err),
          "candidates.abs_err and candidates.rel_err must be ≥ 0");
  }
  if (c.algo == Algo::S2) {
    check(c.cover.has_value(), "cover section required for s2");
    check(std::isfinite(c.cover->epsilon) && c.cover->epsilon > 0, "cover.epsilon must be > 0");
  }
  if (c.algo == Algo::S3) {
    check(c.param.has_value(), "param section required for s3");
    const auto& p = *c.param;
    check(p.domain.kind == "box" || p.domain.kind == "ball", "param.domain.kind must be box or ball");
    if (p.domain.kind == "box")
      check(finite_nonneg(p.domain.abs_err) && finite_nonneg(p.domain.rel_err),
            "param.domain.abs_err and rel_err must be ≥ 0");
    else
      check(!std::isnan(p.domain.radius) && p.domain.radius > 0, "param.domain.radius must be > 0");
    check(finite_nonneg(p.ridge), "param.ridge must be ≥ 0");
    check(p.max_attempts >= 1, "param.max_attempts must be ≥ 1");
    if (p.epsilon) check(std::isfinite(*p.epsilon) && *p.epsilon > 0, "param.epsilon must be > 0");
    if (p.misid_epsilon)
      check(std::isfinite(*p.misid_epsilon) && *p.misid_epsilon > 0, "param.misid_epsilon must be > 0");
  }
  check(!c.outputs.per_step_path.empty() && !c.outputs.summary_path.empty(), "output paths must be non-empty");
}

SimConfig parse_config(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("malformed config: ") + e.what());
  }
  SimConfig c = from_json(doc);
  validate(c);
  return c;
}

SimConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open config file '" + path.string() + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  try {
    return parse_config(buffer.str());
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

nlohmann::ordered_json config_to_json(const SimConfig& c) {
  nlohmann::ordered_json out;
  out["algo"] = to_string(c.algo);
  out["horizon"] = c.horizon;
  out["master_seed"] = c.master_seed;
  out["realizations"] = c.realizations;
  out["eta"] = c.eta;
  out["M"] = c.M;
  out["b"] = number_or_inf(c.b);
  out["sigma"] = c.sigma;
  out["threads"] = c.threads;
  out["schedule"] = {{"mode", to_string(c.schedule.mode)},
                     {"c_e", optional_number(c.schedule.c_e)},
                     {"log_count", optional_number(c.schedule.log_count)},
                     {"epsilon", optional_number(c.schedule.epsilon)}};
  nlohmann::ordered_json system{{"preset", c.system.preset},
                                {"blocks", c.system.blocks},
                                {"block_dim", c.system.block_dim},
                                {"diag", c.system.diag}};
  if (c.system.preset == "explicit") {
    system["A"] = c.system.A;
    system["B"] = c.system.B;
  }
  out["system"] = system;
  if (c.candidates) {
    out["candidates"] = {{"m", c.candidates->m},
                         {"abs_err", c.candidates->abs_err},
                         {"rel_err", c.candidates->rel_err},
                         {"include_truth", c.candidates->include_truth},
                         {"per_realization", c.candidates->per_realization}};
  }
  if (c.cover) out["cover"] = {{"epsilon", c.cover->epsilon}};
  if (c.param) {
    const auto& p = *c.param;
    out["param"] = {{"domain",
                     {{"kind", p.domain.kind},
                      {"abs_err", p.domain.abs_err},
                      {"rel_err", p.domain.rel_err},
                      {"radius", number_or_inf(p.domain.radius)}}},
                    {"ridge", p.ridge},
                    {"epsilon", optional_number(p.epsilon)},
                    {"max_attempts", p.max_attempts},
                    {"misid_epsilon", optional_number(p.misid_epsilon)}};
  }
  out["outputs"] = {{"per_step_path", c.outputs.per_step_path},
                    {"summary_path", c.outputs.summary_path},
                    {"comparator_mode", to_string(c.outputs.comparator_mode)}};
  return out;
}

}  // namespace mmrl
