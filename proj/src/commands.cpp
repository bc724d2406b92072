#include "sadam/commands.hpp"

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include "sadam/config.hpp"
#include "sadam/csv.hpp"

namespace sadam {

using nlohmann::json;
namespace fs = std::filesystem;

const char* const kCompareCsvHeader =
    "label,optimizer,seed,status,best_loss,final_loss,min_clarke_dist,chatter_cosine,"
    "chatter_loss_cv,steps_to_threshold,steps_completed";

namespace {

struct Context {
  CliConfig cfg;
  fs::path out;
  bool force;
  std::ostream& log;
};

std::ostream& log_of(const CommandOptions& o) { return o.log ? *o.log : std::cout; }
std::ostream& err_of(const CommandOptions& o) { return o.err ? *o.err : std::cerr; }

Context prepare(const CommandOptions& opts) {
  CliConfig cfg = load_config(opts.config);
  if (opts.seed) {
    cfg.experiment.seeds = {*opts.seed};
    refresh_resolved(cfg);
  }
  fs::path out = resolve_out_dir(opts.out, cfg.out_dir);
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec || !fs::is_directory(out)) {
    throw IoError("cannot create output directory '" + out.string() + "'");
  }
  return {std::move(cfg), std::move(out), opts.force, log_of(opts)};
}

template <typename Body>
int guarded(const CommandOptions& opts, Body&& body) {
  std::ostream& err = err_of(opts);
  try {
    body(prepare(opts));
    return kExitOk;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const IoError& e) {
    err << "i/o error: " << e.what() << '\n';
    return kExitIo;
  } catch (const std::invalid_argument& e) {
    // semantic checks inside the library (dimensions, id/objective pairing)
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
}

json opt_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

json summary_json(const RunRecord& r) {
  const RunSummary& s = r.summary;
  json j;
  j["best_loss"] = s.best_loss;
  j["final_loss"] = s.final_loss;
  j["min_clarke_dist"] = opt_json(s.min_clarke_dist);
  j["chattering"] = s.chattering
                        ? json{{"cosine", s.chattering->cosine}, {"loss_cv", s.chattering->loss_cv}}
                        : json(nullptr);
  j["steps_to_threshold"] = s.steps_to_threshold ? json(*s.steps_to_threshold) : json(nullptr);
  j["steps_completed"] = s.steps_completed;
  return j;
}

std::string run_json(const Context& ctx, const RunRecord& r, const std::string& label) {
  json j;
  j["config"] = ctx.cfg.resolved;
  j["config_hash"] = ctx.cfg.hash;
  j["library_version"] = SADAM_VERSION;
  j["seed"] = r.seed;
  j["label"] = label;
  j["objective"] = r.objective;
  j["optimizer"] = r.optimizer;
  j["status"] = r.status;
  j["failure"] = r.failure.empty() ? json(nullptr) : json(r.failure);
  j["summary"] = summary_json(r);
  j["final_point"] = r.final_point.values();
  return j.dump(2) + "\n";
}

std::string run_csv(const Context& ctx, const RunRecord& r) {
  std::ostringstream os;
  write_run_csv(os, r, ctx.cfg.hash);
  return os.str();
}

std::string fmt_opt(const std::optional<double>& v) { return v ? format_double(*v) : std::string(); }

void report(const Context& ctx, const std::string& what, const RunRecord& r) {
  ctx.log << what << " seed=" << r.seed << " status=" << r.status
          << " final_loss=" << format_double(r.summary.final_loss)
          << " wall_s=" << format_double(r.wall_seconds) << std::endl;
}

std::string stem(const Context& ctx) { return ctx.cfg.experiment.name; }

double reference_rho(const Context& ctx, const Objective& f, const ParamVector& x,
                     std::uint64_t seed) {
  const ConcentrationSection& cs = ctx.cfg.concentration;
  const bool analytic_ok = dynamic_cast<const Linear*>(&f) || dynamic_cast<const Quadratic*>(&f) ||
                           dynamic_cast<const Constant*>(&f);
  std::string mode = cs.reference;
  if (mode == "auto") mode = analytic_ok ? "analytic" : "monte_carlo";
  if (mode == "analytic") {
    if (!analytic_ok) {
      throw ConfigError("config field /concentration/reference: analytic reference needs a linear, "
                        "quadratic or constant objective");
    }
    Matrix h(f.dim(), f.dim());
    if (const auto* q = dynamic_cast<const Quadratic*>(&f)) h = q->hessian();
    return population_lgi_quadratic(f.gradient(x), h, cs.lgi.delta, cs.lgi.epsilon);
  }
  LgiConfig big = cs.lgi;
  big.k = cs.reference_k;
  SeededRng rng(seed, Stream::kAux);
  return lgi_probe(f, x, {}, big, rng).rho;
}

}  // namespace

fs::path resolve_out_dir(const std::optional<fs::path>& flag,
                         const std::optional<std::string>& from_config) {
  if (flag) return *flag;
  if (from_config) return *from_config;
  if (const char* env = std::getenv("SADAM_OUT_DIR"); env && *env) return env;
  return "out";
}

void write_guarded(const fs::path& path, const std::string& content, const std::string& config_hash,
                   bool force) {
  if (fs::exists(path) && !force) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream buf;
    buf << in.rdbuf();
    const std::string existing = buf.str();
    std::string found;
    if (path.extension() == ".json") {
      const json j = json::parse(existing, nullptr, false);
      if (j.is_object() && j.contains("config_hash") && j["config_hash"].is_string()) {
        found = j["config_hash"].get<std::string>();
      }
    } else {
      const std::string first = existing.substr(0, existing.find('\n'));
      const std::string prefix = hash_comment("");
      if (first.rfind(prefix, 0) == 0) found = first.substr(prefix.size());
    }
    if (found != config_hash) {
      throw IoError("refusing to overwrite '" + path.string() +
                    "': it was produced by a different config (use --force)");
    }
  }
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write '" + tmp.string() + "'");
    out << content;
    if (!out.flush()) throw IoError("cannot write '" + tmp.string() + "'");
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) throw IoError("cannot write '" + path.string() + "': " + ec.message());
}

int cmd_run(const CommandOptions& opts) {
  return guarded(opts, [](Context ctx) {
    for (const auto& r : run_experiment(ctx.cfg.experiment)) {
      const fs::path base = ctx.out / (stem(ctx) + "_seed" + std::to_string(r.seed));
      write_guarded(base.string() + ".csv", run_csv(ctx, r), ctx.cfg.hash, ctx.force);
      write_guarded(base.string() + ".json", run_json(ctx, r, r.optimizer), ctx.cfg.hash,
                    ctx.force);
      report(ctx, "run", r);
    }
  });
}

int cmd_compare(const CommandOptions& opts) {
  return guarded(opts, [](Context ctx) {
    std::ostringstream table;
    table << hash_comment(ctx.cfg.hash) << '\n' << kCompareCsvHeader << '\n';
    for (const auto& entry : ctx.cfg.compare) {
      ExperimentConfig exp = ctx.cfg.experiment;
      exp.optimizer = entry.spec;
      for (const auto& r : run_experiment(exp)) {
        const fs::path base =
            ctx.out / (stem(ctx) + "_" + entry.label + "_seed" + std::to_string(r.seed));
        write_guarded(base.string() + ".csv", run_csv(ctx, r), ctx.cfg.hash, ctx.force);
        write_guarded(base.string() + ".json", run_json(ctx, r, entry.label), ctx.cfg.hash,
                      ctx.force);
        const RunSummary& s = r.summary;
        table << csv_row({entry.label, r.optimizer, std::to_string(r.seed), r.status,
                          format_double(s.best_loss), format_double(s.final_loss),
                          fmt_opt(s.min_clarke_dist),
                          s.chattering ? format_double(s.chattering->cosine) : std::string(),
                          s.chattering ? format_double(s.chattering->loss_cv) : std::string(),
                          s.steps_to_threshold ? std::to_string(*s.steps_to_threshold) : "",
                          std::to_string(s.steps_completed)})
              << '\n';
        report(ctx, "compare " + entry.label, r);
      }
    }
    write_guarded(ctx.out / (stem(ctx) + "_compare.csv"), table.str(), ctx.cfg.hash, ctx.force);
  });
}

int cmd_probe(const CommandOptions& opts) {
  return guarded(opts, [](Context ctx) {
    for (auto seed : ctx.cfg.experiment.seeds) {
      auto f = make_objective(ctx.cfg.experiment.objective, seed);
      if (f->dim() != 2) {
        throw ConfigError("config field /objective: probe needs a two-dimensional objective, got d=" +
                          std::to_string(f->dim()));
      }
      const auto nodes = lgi_field_scan(*f, ctx.cfg.probe.grid, ctx.cfg.probe.lgi, seed);
      std::ostringstream os;
      write_field_csv(os, nodes, ctx.cfg.hash);
      write_guarded(ctx.out / (stem(ctx) + "_field_seed" + std::to_string(seed) + ".csv"), os.str(),
                    ctx.cfg.hash, ctx.force);
      std::size_t failed = 0;
      for (const auto& n : nodes) failed += n.ok ? 0 : 1;
      ctx.log << "probe seed=" << seed << " nodes=" << nodes.size() << " failed=" << failed
              << std::endl;
    }
  });
}

int cmd_concentration(const CommandOptions& opts) {
  return guarded(opts, [](Context ctx) {
    const ConcentrationSection& cs = ctx.cfg.concentration;
    for (auto seed : ctx.cfg.experiment.seeds) {
      auto f = make_objective(ctx.cfg.experiment.objective, seed);
      ParamVector x = cs.point ? ParamVector(*cs.point)
                               : initial_point(ctx.cfg.experiment.objective, *f, seed);
      if (x.dim() != f->dim()) {
        throw ConfigError("config field /concentration/point: expected " +
                          std::to_string(f->dim()) + " coordinates");
      }
      const double ref = reference_rho(ctx, *f, x, seed);
      SeededRng rng(seed, Stream::kProbe);
      const auto rows = concentration_study(*f, x, cs.lgi, cs.k_grid, cs.trials, ref, rng);
      const fs::path base = ctx.out / (stem(ctx) + "_concentration_seed" + std::to_string(seed));
      std::ostringstream os;
      write_concentration_csv(os, rows, ctx.cfg.hash);
      write_guarded(base.string() + ".csv", os.str(), ctx.cfg.hash, ctx.force);

      json j;
      j["config"] = ctx.cfg.resolved;
      j["config_hash"] = ctx.cfg.hash;
      j["library_version"] = SADAM_VERSION;
      j["seed"] = seed;
      j["point"] = x.values();
      j["reference_rho"] = ref;
      j["q95_loglog_slope"] = rows.size() >= 2 ? json(concentration_slope(rows)) : json(nullptr);
      write_guarded(base.string() + ".json", j.dump(2) + "\n", ctx.cfg.hash, ctx.force);
      ctx.log << "concentration seed=" << seed << " reference_rho=" << format_double(ref)
              << std::endl;
    }
  });
}

int cmd_stability(const CommandOptions& opts) {
  return guarded(opts, [](Context ctx) {
    StabilityConfig sc;
    sc.base = ctx.cfg.experiment;
    sc.seeds = ctx.cfg.experiment.seeds;
    sc.swap_index = ctx.cfg.stability.swap_index;
    sc.identical_replacement = ctx.cfg.stability.identical_replacement;
    sc.swap_roles = ctx.cfg.stability.swap_roles;
    if (sc.swap_index >= sc.base.objective.n_samples) {
      throw ConfigError("config field /stability/swap_index: must be < objective n_samples");
    }
    const auto start = std::chrono::steady_clock::now();
    const StabilityTable table = stability_study(sc);
    const double wall =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    const fs::path base = ctx.out / (stem(ctx) + "_stability");
    std::ostringstream os;
    write_stability_csv(os, table, ctx.cfg.hash);
    write_guarded(base.string() + ".csv", os.str(), ctx.cfg.hash, ctx.force);

    json j;
    j["config"] = ctx.cfg.resolved;
    j["config_hash"] = ctx.cfg.hash;
    j["library_version"] = SADAM_VERSION;
    j["seeds"] = sc.seeds;
    j["median_ratio"] = table.median_ratio;
    write_guarded(base.string() + ".json", j.dump(2) + "\n", ctx.cfg.hash, ctx.force);
    ctx.log << "stability seeds=" << sc.seeds.size()
            << " median_ratio=" << format_double(table.median_ratio)
            << " wall_s=" << format_double(wall) << std::endl;
  });
}

int cmd_defaults(std::ostream& os) {
  os << published_defaults().dump(2) << '\n';
  return kExitOk;
}

}  // namespace sadam
