#include "sadam/config.hpp"

#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include "sadam/hash.hpp"

namespace sadam {

using nlohmann::json;

namespace {

// Walks one JSON object, remembering which keys were read so that leftovers
// can be reported as unknown.
class Reader {
 public:
  Reader(const json& obj, std::string path) : obj_(obj), path_(std::move(path)) {
    if (!obj_.is_object()) fail(path_.empty() ? "/" : path_, "expected an object");
  }

  [[noreturn]] static void fail(const std::string& field, const std::string& msg) {
    throw ConfigError("config field " + field + ": " + msg);
  }

  std::string at(const std::string& key) const { return path_ + "/" + key; }

  const json* find(const std::string& key) {
    seen_.insert(key);
    auto it = obj_.find(key);
    return it == obj_.end() ? nullptr : &*it;
  }

  void num(const std::string& key, double& out) {
    if (const json* v = find(key)) out = as_double(*v, at(key));
  }
  void opt_num(const std::string& key, std::optional<double>& out) {
    if (const json* v = find(key)) {
      if (v->is_null()) {
        out.reset();
      } else {
        out = as_double(*v, at(key));
      }
    }
  }
  void count(const std::string& key, std::size_t& out) {
    if (const json* v = find(key)) out = static_cast<std::size_t>(as_u64(*v, at(key)));
  }
  void integer(const std::string& key, int& out) {
    if (const json* v = find(key)) {
      if (!v->is_number_integer()) fail(at(key), "expected an integer");
      const auto x = v->get<std::int64_t>();
      if (x < std::numeric_limits<int>::min() || x > std::numeric_limits<int>::max()) {
        fail(at(key), "integer out of range");
      }
      out = static_cast<int>(x);
    }
  }
  void flag(const std::string& key, bool& out) {
    if (const json* v = find(key)) {
      if (!v->is_boolean()) fail(at(key), "expected true or false");
      out = v->get<bool>();
    }
  }
  void str(const std::string& key, std::string& out) {
    if (const json* v = find(key)) {
      if (!v->is_string()) fail(at(key), "expected a string");
      out = v->get<std::string>();
    }
  }
  void nums(const std::string& key, std::vector<double>& out) {
    if (const json* v = find(key)) out = as_doubles(*v, at(key));
  }
  void counts(const std::string& key, std::vector<std::size_t>& out) {
    if (const json* v = find(key)) {
      if (!v->is_array()) fail(at(key), "expected an array");
      out.clear();
      for (std::size_t i = 0; i < v->size(); ++i) {
        out.push_back(static_cast<std::size_t>(as_u64((*v)[i], at(key) + "/" + std::to_string(i))));
      }
    }
  }

  void finish() const {
    for (auto it = obj_.begin(); it != obj_.end(); ++it) {
      if (!seen_.count(it.key())) fail(at(it.key()), "unknown key");
    }
  }

  static double as_double(const json& v, const std::string& field) {
    if (!v.is_number()) fail(field, "expected a number");
    return v.get<double>();
  }
  static std::uint64_t as_u64(const json& v, const std::string& field) {
    if (v.is_number_unsigned()) return v.get<std::uint64_t>();
    if (v.is_number_integer()) {
      const auto x = v.get<std::int64_t>();
      if (x < 0) fail(field, "expected a non-negative integer");
      return static_cast<std::uint64_t>(x);
    }
    fail(field, "expected an integer");
  }
  static std::vector<double> as_doubles(const json& v, const std::string& field) {
    if (!v.is_array()) fail(field, "expected an array of numbers");
    std::vector<double> out;
    for (std::size_t i = 0; i < v.size(); ++i) {
      out.push_back(as_double(v[i], field + "/" + std::to_string(i)));
    }
    return out;
  }

 private:
  const json& obj_;
  std::string path_;
  std::set<std::string> seen_;
};

template <typename F>
void checked(const std::string& field, F&& validate) {
  try {
    validate();
  } catch (const std::invalid_argument& e) {
    Reader::fail(field, e.what());
  }
}

StepSchedule read_schedule(const json& v, const std::string& path) {
  StepSchedule s;
  Reader r(v, path);
  std::string kind = std::string(to_string(s.kind));
  r.str("kind", kind);
  checked(r.at("kind"), [&] { s.kind = schedule_kind_from_string(kind); });
  if (s.kind == StepSchedule::Kind::kInverseSqrt) s.power = 0.5;
  if (s.kind == StepSchedule::Kind::kRobbinsMonro) r.num("power", s.power);
  r.finish();
  checked(path, [&] { s.validate(); });
  return s;
}

LgiConfig read_lgi(const json* v, const std::string& path) {
  LgiConfig cfg;
  if (!v) return cfg;
  Reader r(*v, path);
  r.count("k", cfg.k);
  r.num("delta", cfg.delta);
  r.num("epsilon", cfg.epsilon);
  r.num("lambda", cfg.lambda);
  r.opt_num("rho_cap", cfg.rho_cap);
  r.finish();
  checked(path, [&] { cfg.validate(); });
  return cfg;
}

OptimizerSpec read_optimizer(const json& v, const std::string& path, std::string* label) {
  Reader r(v, path);
  std::string id = "sadam";
  r.str("id", id);
  OptimizerSpec spec;
  checked(r.at("id"), [&] { spec = OptimizerSpec::defaults_for(id); });
  if (label) {
    *label = id;
    r.str("label", *label);
  }

  StepSchedule* schedule = nullptr;
  if (id == "sadam" || id == "adamw") {
    r.num("lr", spec.adam.lr);
    r.num("beta1", spec.adam.beta1);
    r.num("beta2", spec.adam.beta2);
    r.num("eps", spec.adam.eps);
    r.num("weight_decay", spec.adam.weight_decay);
    r.flag("bias_correction", spec.adam.bias_correction);
    schedule = &spec.adam.schedule;
    if (id == "sadam") spec.lgi = read_lgi(r.find("lgi"), r.at("lgi"));
  } else if (id == "proxsgd") {
    r.num("lr", spec.prox.lr);
    r.num("momentum", spec.prox.momentum);
    r.num("l1_weight", spec.prox.l1_weight);
    schedule = &spec.prox.schedule;
  } else {
    r.num("lr", spec.subgrad.lr);
    schedule = &spec.subgrad.schedule;
  }
  if (const json* s = r.find("schedule")) *schedule = read_schedule(*s, r.at("schedule"));
  r.finish();
  checked(path, [&] { spec.validate(); });
  return spec;
}

QuantizerConfig read_quantizer(const json* v, const std::string& path) {
  QuantizerConfig q;
  if (!v) return q;
  Reader r(*v, path);
  r.num("scale", q.scale);
  r.integer("q_min", q.q_min);
  r.integer("q_max", q.q_max);
  r.finish();
  checked(path, [&] { q.validate(); });
  return q;
}

ObjectiveSpec read_objective(const json& v, const std::string& path) {
  Reader r(v, path);
  ObjectiveSpec spec;
  r.str("id", spec.id);
  const std::string& id = spec.id;
  if (id == "l1_quadratic") {
    r.nums("anchor", spec.anchor);
    r.num("l1_weight", spec.l1_weight);
    r.nums("quad_diag", spec.quad_diag);
  } else if (id == "linear") {
    r.nums("coefficients", spec.coefficients);
  } else if (id == "quadratic") {
    r.nums("coefficients", spec.coefficients);
    if (const json* h = r.find("hessian")) {
      if (!h->is_array()) Reader::fail(r.at("hessian"), "expected an array of rows");
      spec.hessian.clear();
      for (std::size_t i = 0; i < h->size(); ++i) {
        spec.hessian.push_back(Reader::as_doubles((*h)[i], r.at("hessian") + "/" + std::to_string(i)));
      }
    }
  } else if (id == "constant") {
    r.num("value", spec.constant_value);
    r.count("dim", spec.dim);
  } else if (id == "staircase") {
    r.count("dim", spec.dim);
    r.num("target", spec.target);
    r.flag("ste", spec.ste);
    spec.quantizer = read_quantizer(r.find("quantizer"), r.at("quantizer"));
  } else if (id == "mlp") {
    r.counts("widths", spec.widths);
    r.flag("quantized", spec.quantized);
    r.count("n_samples", spec.n_samples);
    r.num("separation", spec.separation);
    spec.quantizer = read_quantizer(r.find("quantizer"), r.at("quantizer"));
  }
  if (const json* init = r.find("init")) {
    if (!init->is_null()) spec.init = Reader::as_doubles(*init, r.at("init"));
  }
  r.num("init_scale", spec.init_scale);
  r.finish();
  checked(r.at("id"), [&] { spec.validate(); });
  return spec;
}

GridSpec read_grid(const json* v, const std::string& path) {
  GridSpec g;
  if (!v) return g;
  Reader r(*v, path);
  r.num("x_min", g.x_min);
  r.num("x_max", g.x_max);
  r.count("nx", g.nx);
  r.num("y_min", g.y_min);
  r.num("y_max", g.y_max);
  r.count("ny", g.ny);
  r.finish();
  checked(path, [&] { g.validate(); });
  return g;
}

json quantizer_json(const QuantizerConfig& q) {
  return {{"scale", q.scale}, {"q_min", q.q_min}, {"q_max", q.q_max}};
}

json build_resolved(const CliConfig& c) {
  const ExperimentConfig& e = c.experiment;
  json doc;
  doc["schema_version"] = kSchemaVersion;
  doc["name"] = e.name;
  doc["objective"] = to_json(e.objective);
  doc["optimizer"] = to_json(e.optimizer);
  json set = json::array();
  for (const auto& o : c.compare) {
    json entry = to_json(o.spec);
    entry["label"] = o.label;
    set.push_back(entry);
  }
  doc["optimizers"] = set;
  doc["steps"] = e.steps;
  doc["batch_size"] = e.batch_size;
  doc["seeds"] = e.seeds;
  doc["record_every"] = e.record_every;
  doc["chatter_window"] = e.chatter_window;
  doc["loss_threshold"] = e.loss_threshold ? json(*e.loss_threshold) : json(nullptr);

  const GridSpec& g = c.probe.grid;
  doc["probe"] = {{"grid",
                   {{"x_min", g.x_min},
                    {"x_max", g.x_max},
                    {"nx", g.nx},
                    {"y_min", g.y_min},
                    {"y_max", g.y_max},
                    {"ny", g.ny}}},
                  {"lgi", to_json(c.probe.lgi)}};
  const ConcentrationSection& cs = c.concentration;
  doc["concentration"] = {{"point", cs.point ? json(*cs.point) : json(nullptr)},
                          {"k_grid", cs.k_grid},
                          {"trials", cs.trials},
                          {"reference", cs.reference},
                          {"reference_k", cs.reference_k},
                          {"lgi", to_json(cs.lgi)}};
  doc["stability"] = {{"swap_index", c.stability.swap_index},
                      {"identical_replacement", c.stability.identical_replacement},
                      {"swap_roles", c.stability.swap_roles}};
  return doc;
}

}  // namespace

json to_json(const StepSchedule& s) {
  json j = {{"kind", std::string(to_string(s.kind))}};
  if (s.kind == StepSchedule::Kind::kRobbinsMonro) j["power"] = s.power;
  return j;
}

json to_json(const LgiConfig& cfg) {
  return {{"k", cfg.k},
          {"delta", cfg.delta},
          {"epsilon", cfg.epsilon},
          {"lambda", cfg.lambda},
          {"rho_cap", cfg.rho_cap ? json(*cfg.rho_cap) : json(nullptr)}};
}

json to_json(const OptimizerSpec& spec) {
  json j = {{"id", spec.id}};
  if (spec.id == "sadam" || spec.id == "adamw") {
    j["lr"] = spec.adam.lr;
    j["beta1"] = spec.adam.beta1;
    j["beta2"] = spec.adam.beta2;
    j["eps"] = spec.adam.eps;
    j["weight_decay"] = spec.adam.weight_decay;
    j["bias_correction"] = spec.adam.bias_correction;
    j["schedule"] = to_json(spec.adam.schedule);
    if (spec.id == "sadam") j["lgi"] = to_json(spec.lgi);
  } else if (spec.id == "proxsgd") {
    j["lr"] = spec.prox.lr;
    j["momentum"] = spec.prox.momentum;
    j["l1_weight"] = spec.prox.l1_weight;
    j["schedule"] = to_json(spec.prox.schedule);
  } else {
    j["lr"] = spec.subgrad.lr;
    j["schedule"] = to_json(spec.subgrad.schedule);
  }
  return j;
}

json to_json(const ObjectiveSpec& spec) {
  json j = {{"id", spec.id}};
  const std::string& id = spec.id;
  if (id == "l1_quadratic") {
    j["anchor"] = spec.anchor;
    j["l1_weight"] = spec.l1_weight;
    j["quad_diag"] = spec.quad_diag;
  } else if (id == "linear") {
    j["coefficients"] = spec.coefficients;
  } else if (id == "quadratic") {
    j["coefficients"] = spec.coefficients;
    j["hessian"] = spec.hessian;
  } else if (id == "constant") {
    j["value"] = spec.constant_value;
    j["dim"] = spec.dim;
  } else if (id == "staircase") {
    j["dim"] = spec.dim;
    j["target"] = spec.target;
    j["ste"] = spec.ste;
    j["quantizer"] = quantizer_json(spec.quantizer);
  } else if (id == "mlp") {
    j["widths"] = spec.widths;
    j["quantized"] = spec.quantized;
    j["n_samples"] = spec.n_samples;
    j["separation"] = spec.separation;
    j["quantizer"] = quantizer_json(spec.quantizer);
  }
  j["init"] = spec.init ? json(*spec.init) : json(nullptr);
  j["init_scale"] = spec.init_scale;
  return j;
}

CliConfig parse_config(const json& doc) {
  CliConfig c;
  Reader r(doc, "");
  if (const json* v = r.find("schema_version")) {
    if (!v->is_number_integer() || v->get<std::int64_t>() != kSchemaVersion) {
      Reader::fail("/schema_version", "unsupported version (expected " +
                                          std::to_string(kSchemaVersion) + ")");
    }
  }
  ExperimentConfig& e = c.experiment;
  r.str("name", e.name);
  if (e.name.empty() || e.name.find_first_of("/\\") != std::string::npos) {
    Reader::fail("/name", "must be a non-empty file-name stem");
  }
  if (const json* v = r.find("objective")) e.objective = read_objective(*v, "/objective");
  if (const json* v = r.find("optimizer")) e.optimizer = read_optimizer(*v, "/optimizer", nullptr);
  if (const json* v = r.find("optimizers")) {
    if (!v->is_array() || v->empty()) Reader::fail("/optimizers", "expected a non-empty array");
    std::set<std::string> labels;
    for (std::size_t i = 0; i < v->size(); ++i) {
      const std::string path = "/optimizers/" + std::to_string(i);
      LabelledOptimizer o;
      o.spec = read_optimizer((*v)[i], path, &o.label);
      if (o.label.empty() || o.label.find_first_of("/\\,") != std::string::npos) {
        Reader::fail(path + "/label", "must be non-empty without '/', '\\' or ','");
      }
      if (!labels.insert(o.label).second) Reader::fail(path + "/label", "duplicate label");
      c.compare.push_back(std::move(o));
    }
  } else {
    c.compare.push_back({e.optimizer.id, e.optimizer});
  }
  r.count("steps", e.steps);
  r.count("batch_size", e.batch_size);
  if (const json* v = r.find("seeds")) {
    if (!v->is_array()) Reader::fail("/seeds", "expected an array of integers");
    e.seeds.clear();
    for (std::size_t i = 0; i < v->size(); ++i) {
      e.seeds.push_back(Reader::as_u64((*v)[i], "/seeds/" + std::to_string(i)));
    }
  }
  r.count("record_every", e.record_every);
  r.count("chatter_window", e.chatter_window);
  r.opt_num("loss_threshold", e.loss_threshold);
  if (const json* v = r.find("out_dir")) {
    if (!v->is_string()) Reader::fail("/out_dir", "expected a string");
    c.out_dir = v->get<std::string>();
  }

  if (const json* v = r.find("probe")) {
    Reader p(*v, "/probe");
    c.probe.grid = read_grid(p.find("grid"), "/probe/grid");
    c.probe.lgi = read_lgi(p.find("lgi"), "/probe/lgi");
    p.finish();
  }
  if (const json* v = r.find("concentration")) {
    Reader p(*v, "/concentration");
    ConcentrationSection& cs = c.concentration;
    if (const json* pt = p.find("point")) {
      if (!pt->is_null()) cs.point = Reader::as_doubles(*pt, "/concentration/point");
    }
    p.counts("k_grid", cs.k_grid);
    p.count("trials", cs.trials);
    p.str("reference", cs.reference);
    p.count("reference_k", cs.reference_k);
    cs.lgi = read_lgi(p.find("lgi"), "/concentration/lgi");
    p.finish();
    if (cs.k_grid.empty()) Reader::fail("/concentration/k_grid", "must be non-empty");
    for (std::size_t k : cs.k_grid) {
      if (k < 2) Reader::fail("/concentration/k_grid", "entries must be >= 2");
    }
    if (cs.trials < 1) Reader::fail("/concentration/trials", "must be >= 1");
    if (cs.reference != "auto" && cs.reference != "analytic" && cs.reference != "monte_carlo") {
      Reader::fail("/concentration/reference", "expected auto, analytic or monte_carlo");
    }
    if (cs.reference_k < 2) Reader::fail("/concentration/reference_k", "must be >= 2");
  }
  if (const json* v = r.find("stability")) {
    Reader p(*v, "/stability");
    p.count("swap_index", c.stability.swap_index);
    p.flag("identical_replacement", c.stability.identical_replacement);
    p.flag("swap_roles", c.stability.swap_roles);
    p.finish();
  }
  r.finish();

  if (e.steps < 1) Reader::fail("/steps", "must be >= 1");
  if (e.seeds.empty()) Reader::fail("/seeds", "must be non-empty");
  if (e.record_every < 1) Reader::fail("/record_every", "must be >= 1");
  refresh_resolved(c);
  return c;
}

void refresh_resolved(CliConfig& cfg) {
  cfg.resolved = build_resolved(cfg);
  cfg.hash = sha256_hex(cfg.resolved.dump());
}

CliConfig parse_config_text(const std::string& text, const std::string& origin) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(origin + ": " + e.what());
  }
  try {
    return parse_config(doc);
  } catch (const ConfigError& e) {
    throw ConfigError(origin + ": " + e.what());
  }
}

CliConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read config file '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str(), path.string());
}

json published_defaults() {
  json doc;
  doc["sadam"] = to_json(OptimizerSpec::defaults_for("sadam"));
  doc["sadam"]["lgi"]["rho_cap"] = nullptr;
  doc["sadam"]["lgi"]["rho_cap_published"] = 10.0;
  doc["sadam"]["lgi"]["k_published"] = {2, 8};
  doc["adamw"] = to_json(OptimizerSpec::defaults_for("adamw"));
  doc["proxsgd"] = to_json(OptimizerSpec::defaults_for("proxsgd"));
  doc["batch_size"] = 128;
  return doc;
}

}  // namespace sadam
