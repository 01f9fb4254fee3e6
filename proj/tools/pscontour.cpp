// pscontour: command-line front end.
//
//   pscontour model-check  (--model FILE | --builtin SPEC)
//   pscontour contours     (--model | --builtin) --config FILE
//   pscontour verify       (--model | --builtin) --box 4x4 --beta 0.5,1,2
//   pscontour census       --d 2 --r 1 --n-max 5 [--contours (--model | --builtin)]
//   pscontour sample       (--model | --builtin) --box 16x16 --beta 2 --sweeps 10000
//   pscontour coexist      (--model | --builtin) --boxes 3x3,4x4 --beta 1,2
//   pscontour replay       --manifest DIR/manifest.json [--out DIR] [--workers N]
//
// Every command writes manifest.json next to its CSV output. Exit codes:
// 0 ok, 1 a checked bound failed, 2 bad input, 3 over budget.

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>

#include "pscontour/pscontour.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace pscontour;

namespace {

constexpr const char* kVersion = "0.1.0";

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) out.push_back(item);
  return out;
}

long parse_int(const std::string& s, const char* what) {
  long v = 0;
  if (!detail::parse_long(s, v)) throw InputError(std::string("bad ") + what + " '" + s + "'");
  return v;
}

/// "4x4" or "4x3x3"; boxes are centered as in Box::centered.
Box parse_box(const std::string& s, int d) {
  const auto parts = split(s, 'x');
  std::vector<Coord> sides;
  for (const auto& p : parts) sides.push_back(static_cast<Coord>(parse_int(p, "box side")));
  if (sides.size() == 1) sides.assign(static_cast<std::size_t>(d), sides[0]);
  if (static_cast<int>(sides.size()) != d)
    throw InputError("box '" + s + "' has " + std::to_string(sides.size()) + " sides, model dimension is " +
                     std::to_string(d));
  return Box::centered(sides);
}

Site parse_site(const std::string& s, int d) {
  std::vector<Coord> c;
  for (const auto& p : split(s, ',')) c.push_back(static_cast<Coord>(parse_int(p, "site coordinate")));
  if (static_cast<int>(c.size()) != d) throw InputError("site '" + s + "' does not have " + std::to_string(d) + " coordinates");
  return Site(c);
}

std::vector<double> parse_betas(const std::string& s) {
  std::vector<double> out;
  for (const auto& p : split(s, ',')) {
    double v = 0;
    if (!detail::parse_double(p, v) || v < 0) throw InputError("bad beta '" + p + "'");
    out.push_back(v);
  }
  if (out.empty()) throw InputError("empty beta list");
  return out;
}

std::string box_label(const Box& b) {
  std::string out;
  for (int k = 0; k < b.dim(); ++k) out += (k ? "x" : "") + std::to_string(b.extent(k));
  return out;
}

struct Common {
  std::string model_path;
  std::string builtin;
  unsigned workers = 1;
  std::uint64_t seed = 1;
  std::uint64_t budget = 0;  // 0: module default
  std::string out = ".";
};

void add_common(CLI::App* cmd, Common& c, bool needs_model) {
  if (needs_model) {
    auto* m = cmd->add_option("--model", c.model_path, "model file");
    auto* b = cmd->add_option("--builtin", c.builtin, "built-in model, e.g. potts:q=3,J=1");
    m->excludes(b);
  }
  cmd->add_option("--workers", c.workers, "worker threads (1 is the reference output)")->check(CLI::Range(1u, 1024u));
  cmd->add_option("--seed", c.seed, "random seed");
  cmd->add_option("--budget", c.budget, "enumeration budget (configurations, patterns or visits)");
  cmd->add_option("--out", c.out, "output directory");
}

ModelSpec load_spec(const Common& c) {
  if (!c.model_path.empty()) return load_model(c.model_path);
  if (!c.builtin.empty()) return parse_builtin(c.builtin);
  throw InputError("one of --model or --builtin is required");
}

std::uint64_t budget_or(const Common& c, std::uint64_t fallback) { return c.budget ? c.budget : fallback; }

class Output {
 public:
  Output(const Common& c, std::string command, std::vector<std::string> args)
      : dir_(c.out), manifest_(json::object()) {
    fs::create_directories(dir_);
    manifest_["command"] = std::move(command);
    manifest_["artifact_version"] = kVersion;
    manifest_["model"] = c.model_path.empty() ? json(nullptr) : json(c.model_path);
    manifest_["builtin"] = c.builtin.empty() ? json(nullptr) : json(c.builtin);
    manifest_["workers"] = c.workers;
    manifest_["seed"] = c.seed;
    manifest_["budget"] = c.budget;
    manifest_["output_dir"] = c.out;
    manifest_["parameters"] = json::object();
    manifest_["arguments"] = std::move(args);
    manifest_["outputs"] = json::array();
  }

  json& parameters() { return manifest_["parameters"]; }

  std::ofstream open(const std::string& name) {
    std::ofstream f(dir_ / name, std::ios::binary);
    if (!f) throw InputError("cannot write " + (dir_ / name).string());
    manifest_["outputs"].push_back(name);
    return f;
  }

  void finish(int exit_code) {
    manifest_["exit_code"] = exit_code;
    std::ofstream f(dir_ / "manifest.json", std::ios::binary);
    f << manifest_.dump(2) << '\n';
  }

 private:
  fs::path dir_;
  json manifest_;
};

// --- commands -------------------------------------------------------------

int cmd_model_check(const Common& c, Output& out) {
  const Model model(load_spec(c), budget_or(c, kDefaultPatternBudget));
  const auto& sp = model.spectrum();
  const auto& gs = model.ground_states();
  std::cout << "model: d=" << model.d() << " r=" << model.r() << " q=" << model.q() << " s=" << model.s() << '\n'
            << "U_min = " << format_real(sp.u_min) << '\n'
            << "lambda0 = " << format_real(sp.lambda0) << '\n'
            << "distinct U values: " << sp.value_set_size() << '\n';
  std::cout << "A1 ground states: " << (gs.certified ? "certified" : "UNVERIFIED");
  if (gs.certified) {
    std::cout << " (constants";
    for (auto j : gs.ground_states) std::cout << ' ' << j;
    std::cout << ')';
  }
  std::cout << '\n';
  for (auto j : gs.missing_constants) std::cout << "  constant " << j << " is not minimal\n";
  for (std::size_t k = 0; k < gs.offending_patterns.size() && k < 10; ++k) {
    std::cout << "  non-constant minimizer:";
    for (auto v : gs.offending_patterns[k]) std::cout << ' ' << v;
    std::cout << '\n';
  }
  std::cout << "A2 two distinct values: " << (model.gapped() ? "yes" : "NO") << '\n'
            << "A3 symmetry under permutations of 1..s: " << (model.symmetric() ? "yes" : "NO") << '\n';

  auto f = out.open("spectrum.csv");
  CsvWriter csv(f, {"level", "value", "relative", "patterns"});
  for (std::size_t k = 0; k < sp.levels.size(); ++k) {
    std::size_t n = 0;
    for (double u : model.potential().values()) n += std::abs(u - sp.levels[k]) <= kLevelTolerance;
    csv.row({std::to_string(k), format_real(sp.levels[k]), format_real(sp.levels[k] - sp.u_min), std::to_string(n)});
  }
  auto& p = out.parameters();
  p["u_min"] = sp.u_min;
  p["lambda0"] = sp.lambda0;
  p["certified"] = gs.certified;
  p["gapped"] = model.gapped();
  p["symmetric"] = model.symmetric();
  return gs.certified && model.gapped() && model.symmetric() ? 0 : 1;
}

int cmd_contours(const Common& c, const std::string& config_path, Output& out) {
  const Model model(load_spec(c), budget_or(c, kDefaultPatternBudget));
  const auto config = load_configuration(config_path, model.spec());
  const auto gs = contours(config, model);
  const auto b = boundary(config, model);
  std::size_t total = 0;
  auto f = out.open("contours.csv");
  CsvWriter csv(f, {"contour", "subcontours", "marks", "interior_size", "size", "first_site"});
  for (std::size_t k = 0; k < gs.size(); ++k) {
    const auto& g = gs[k];
    std::set<Spin> marks;
    for (const auto& sc : g.subcontours) marks.insert(sc.mark);
    std::string mark_list;
    for (auto m : marks) mark_list += (mark_list.empty() ? "" : ";") + std::to_string(m);
    total += g.size();
    std::cout << "contour " << k << ": subcontours=" << g.subcontours.size() << " marks=" << mark_list
              << " interior=" << g.interior.size() << " |gamma|=" << g.size() << " at " << g.interior.front().to_string()
              << '\n';
    csv.row({std::to_string(k), std::to_string(g.subcontours.size()), mark_list, std::to_string(g.interior.size()),
             std::to_string(g.size()), g.interior.front().to_string()});
  }
  const bool ok = total == b.size();
  std::cout << "|boundary| = " << b.size() << ", sum of |gamma| = " << total
            << (ok ? " (decomposition holds)" : " (DECOMPOSITION FAILS)") << '\n';
  out.parameters()["config"] = config_path;
  out.parameters()["boundary_size"] = b.size();
  out.parameters()["contours"] = gs.size();
  return ok ? 0 : 1;
}

int cmd_verify(const Common& c, const std::string& box_s, const std::string& betas_s, Spin exterior, Output& out) {
  const Model model(load_spec(c));
  const Box box = parse_box(box_s, model.d());
  const auto betas = parse_betas(betas_s);
  const EnumerationOptions opt{budget_or(c, kDefaultEnumerationBudget), c.workers};
  auto f = out.open("contour_stats.csv");
  CsvWriter csv(f, {"beta", "contour", "size", "probability", "bound", "slack"});
  auto fm = out.open("marginals.csv");
  CsvWriter mcsv(fm, {"beta", "site", "spin", "marginal"});
  std::size_t violations = 0;
  for (double beta : betas) {
    const auto stats = contour_statistics(model, {box, exterior, beta}, opt);
    violations += stats.violations;
    for (const auto& rec : stats.records)
      csv.row({format_real(beta), rec.contour.to_string(), std::to_string(rec.contour.size()),
               format_real(rec.probability), format_real(rec.bound), format_real(rec.slack)});
    const auto dist = enumerate_distribution(model, {box, exterior, beta}, opt);
    for (const auto& x : box.sites())
      for (Spin j = 1; j <= model.q(); ++j) mcsv.row({format_real(beta), x.to_string(), std::to_string(j), format_real(dist.marginal(x, j))});
    std::cout << "beta=" << format_real(beta) << ": " << stats.records.size() << " contours, " << stats.violations
              << " violations";
    if (!stats.records.empty()) std::cout << ", tightest slack " << format_real(stats.records.front().slack);
    std::cout << '\n';
  }
  out.parameters()["box"] = box_label(box);
  out.parameters()["betas"] = betas;
  out.parameters()["exterior"] = exterior;
  out.parameters()["violations"] = violations;
  return violations == 0 ? 0 : 1;
}

int cmd_census(const Common& c, int d, Coord r, std::size_t n_max, bool contour_mode, Output& out) {
  const auto budget = budget_or(c, kDefaultCensusBudget);
  CensusReport rep;
  std::size_t mismatches = 0;
  if (contour_mode) {
    const Model model(load_spec(c));
    d = model.d();
    r = model.r();
    const Site root = Site::origin(d);
    // round trip: every enumerated contour must come back from the extractor
    const Box box = Box::centered(d, static_cast<Coord>(2 * (n_max / 2 + 2) * r + 1));
    rep = census_contours(model, root, n_max, 1, budget, [&](std::span<const MarkedSite> gamma, std::size_t size) {
      auto cfg = Configuration::uniform(box, 1);
      for (const auto& ms : gamma) cfg.set(ms.site, ms.mark);
      const auto gs = contours(cfg, model);
      if (gs.size() != 1 || gs[0].size() != size ||
          gs[0].marked_sites() != std::vector<MarkedSite>(gamma.begin(), gamma.end()))
        ++mismatches;
    });
  } else {
    rep = census_connected_subgraphs(d, r, n_max, budget);
  }
  auto f = out.open(contour_mode ? "census_contours.csv" : "census_subgraphs.csv");
  CsvWriter csv(f, {"n", "count", "bound", "ratio"});
  std::cout << (contour_mode ? "rooted contours" : "rooted connected cube sets") << ", d=" << d << " r=" << r
            << " k=" << rep.k << '\n';
  for (const auto& row : rep.rows) {
    csv.row({std::to_string(row.n), std::to_string(row.count), format_real(row.bound), format_real(row.ratio)});
    std::cout << "n=" << row.n << " count=" << row.count << " bound=" << format_real(row.bound)
              << (double(row.count) <= row.bound ? "" : "  VIOLATED") << '\n';
  }
  if (contour_mode) std::cout << "round-trip mismatches: " << mismatches << '\n';
  auto& p = out.parameters();
  p["d"] = d;
  p["r"] = r;
  p["n_max"] = n_max;
  p["mode"] = contour_mode ? "contours" : "subgraphs";
  p["k"] = rep.k;
  p["window"] = rep.window.to_string();
  return rep.passed() && mismatches == 0 ? 0 : 1;
}

struct SampleArgs {
  std::string box = "4x4";
  double beta = 1.0;
  std::uint64_t sweeps = 10000;
  std::uint64_t burn_in = 1000;
  std::uint64_t thinning = 1;
  std::string site;
  Spin exterior = 1;
  std::size_t tail = 0;
  std::uint32_t replicas = 1;
  bool metropolis = false;
};

int cmd_sample(const Common& c, const SampleArgs& a, Output& out) {
  const Model model(load_spec(c));
  ChainSpec spec;
  spec.ensemble = {parse_box(a.box, model.d()), a.exterior, a.beta};
  spec.seed = c.seed;
  spec.burn_in = a.burn_in;
  spec.samples = a.sweeps;
  spec.thinning = a.thinning;
  spec.rule = a.metropolis ? UpdateRule::metropolis : UpdateRule::heat_bath;
  const Site x = a.site.empty() ? Site::origin(model.d()) : parse_site(a.site, model.d());
  std::vector<Observable> obs;
  for (Spin j = 1; j <= model.q(); ++j) obs.push_back(Observable::site_spin(x, j));
  obs.push_back(Observable::energy());
  obs.push_back(Observable::boundary_size());
  for (std::size_t n = 0; n <= a.tail && a.tail > 0; ++n) obs.push_back(Observable::contour_tail(n));
  const auto est = run_replicas(model, spec, obs, a.replicas, c.workers);
  auto f = out.open("sample.csv");
  CsvWriter csv(f, {"beta", "box", "observable", "estimate", "stderr", "seed"});
  for (const auto& e : est) {
    csv.row({format_real(a.beta), box_label(spec.ensemble.box), e.name, format_real(e.mean), format_real(e.std_error),
             std::to_string(c.seed)});
    std::cout << e.name << " = " << format_real(e.mean) << " +- " << format_real(e.std_error) << '\n';
  }
  auto& p = out.parameters();
  p["box"] = box_label(spec.ensemble.box);
  p["beta"] = a.beta;
  p["sweeps"] = a.sweeps;
  p["burn_in"] = a.burn_in;
  p["thinning"] = a.thinning;
  p["site"] = x.to_string();
  p["exterior"] = a.exterior;
  p["replicas"] = a.replicas;
  p["rule"] = a.metropolis ? "metropolis" : "heat-bath";
  return 0;
}

int cmd_coexist(const Common& c, const std::string& boxes_s, const std::string& betas_s, const std::string& site_s,
                Output& out) {
  const Model model(load_spec(c));
  const auto betas = parse_betas(betas_s);
  const Site x = site_s.empty() ? Site::origin(model.d()) : parse_site(site_s, model.d());
  const EnumerationOptions opt{budget_or(c, kDefaultEnumerationBudget), c.workers};
  auto f = out.open("gap.csv");
  CsvWriter csv(f, {"box", "beta", "mu1_1", "mu2_1", "mu1_2", "gap", "permutation_residual"});
  std::vector<std::string> labels;
  for (const auto& bs : split(boxes_s, ',')) {
    const Box box = parse_box(bs, model.d());
    labels.push_back(box_label(box));
    for (const auto& row : coexistence_gap(model, box, x, betas, opt)) {
      csv.row({box_label(box), format_real(row.beta), format_real(row.mu11), format_real(row.mu21),
               format_real(row.mu12), format_real(row.gap), format_real(row.permutation_residual)});
      std::cout << box_label(box) << " beta=" << format_real(row.beta) << " gap=" << format_real(row.gap)
                << " residual=" << format_real(row.permutation_residual) << '\n';
    }
  }
  out.parameters()["boxes"] = labels;
  out.parameters()["betas"] = betas;
  out.parameters()["site"] = x.to_string();
  return 0;
}

int run(const std::vector<std::string>& args);

int cmd_replay(const std::string& manifest_path, const std::string& out_dir, std::optional<unsigned> workers) {
  std::ifstream in(manifest_path);
  if (!in) throw InputError("cannot open manifest '" + manifest_path + "'");
  json m;
  try {
    m = json::parse(in);
  } catch (const json::exception& e) {
    throw InputError("manifest '" + manifest_path + "' is not valid JSON: " + e.what());
  }
  if (!m.contains("arguments") || !m["arguments"].is_array()) throw InputError("manifest has no argument list");
  std::vector<std::string> args = m["arguments"].get<std::vector<std::string>>();
  if (args.empty() || args.front() == "replay") throw InputError("manifest does not describe a replayable command");
  args.push_back("--out");
  args.push_back(out_dir.empty() ? m.value("output_dir", std::string(".")) : out_dir);
  if (workers) {
    std::vector<std::string> kept;
    for (std::size_t k = 0; k < args.size(); ++k) {
      if (args[k] == "--workers") {
        ++k;
        continue;
      }
      if (args[k].rfind("--workers=", 0) == 0) continue;
      kept.push_back(args[k]);
    }
    args = std::move(kept);
    args.push_back("--workers");
    args.push_back(std::to_string(*workers));
  }
  return run(args);
}

/// Drops --out and its value so the recorded arguments can be re-pointed.
std::vector<std::string> recordable(const std::vector<std::string>& args) {
  std::vector<std::string> out;
  for (std::size_t k = 0; k < args.size(); ++k) {
    if (args[k] == "--out") {
      ++k;
      continue;
    }
    if (args[k].rfind("--out=", 0) == 0) continue;
    out.push_back(args[k]);
  }
  return out;
}

int run(const std::vector<std::string>& args) {
  CLI::App app{"Contour construction and Peierls-bound verification for finite-range lattice spin models"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);

  Common common;
  std::string config_path, box_s = "4x4", betas_s = "1", boxes_s = "3x3,4x4", site_s, manifest_path;
  Spin exterior = 1;
  int d = 2;
  Coord r = 1;
  std::size_t n_max = 5;
  bool contour_mode = false;
  SampleArgs sample;
  std::optional<unsigned> replay_workers;
  std::string replay_out;

  auto* mc = app.add_subcommand("model-check", "spectrum, ground-state certificate and symmetry");
  add_common(mc, common, true);

  auto* ct = app.add_subcommand("contours", "contour decomposition of a configuration file");
  add_common(ct, common, true);
  ct->add_option("--config", config_path, "configuration file")->required();

  auto* vf = app.add_subcommand("verify", "exact contour probabilities against exp(-beta lambda0 |gamma|)");
  add_common(vf, common, true);
  vf->add_option("--box", box_s, "box sides, e.g. 4x4");
  vf->add_option("--beta", betas_s, "comma-separated inverse temperatures");
  vf->add_option("--exterior", exterior, "boundary spin");

  auto* cs = app.add_subcommand("census", "rooted cube-set and contour counts against their bounds");
  add_common(cs, common, true);
  cs->add_option("--d", d, "dimension (subgraph mode)");
  cs->add_option("--r", r, "range (subgraph mode)");
  cs->add_option("--n-max", n_max, "largest size counted")->check(CLI::Range(std::size_t{1}, std::size_t{64}));
  cs->add_flag("--contours", contour_mode, "count contours of the given model instead of cube sets");

  auto* sp = app.add_subcommand("sample", "single-site Markov chain estimates");
  add_common(sp, common, true);
  sp->add_option("--box", sample.box, "box sides");
  sp->add_option("--beta", sample.beta, "inverse temperature")->check(CLI::NonNegativeNumber);
  sp->add_option("--sweeps", sample.sweeps, "recorded sweeps");
  sp->add_option("--burn-in", sample.burn_in, "discarded sweeps");
  sp->add_option("--thinning", sample.thinning, "record every k-th sweep");
  sp->add_option("--site", sample.site, "observed site, e.g. 0,0 (default origin)");
  sp->add_option("--exterior", sample.exterior, "boundary spin");
  sp->add_option("--tail", sample.tail, "also estimate P(some |gamma| >= n) for n = 0..N");
  sp->add_option("--replicas", sample.replicas, "independent replicas")->check(CLI::Range(1u, 4096u));
  sp->add_flag("--metropolis", sample.metropolis, "Metropolis instead of heat-bath updates");

  auto* cx = app.add_subcommand("coexist", "gap between boundary conditions 1 and 2");
  add_common(cx, common, true);
  cx->add_option("--boxes", boxes_s, "comma-separated box list, e.g. 3x3,4x4");
  cx->add_option("--beta", betas_s, "comma-separated inverse temperatures");
  cx->add_option("--site", site_s, "observed site (default origin)");

  auto* rp = app.add_subcommand("replay", "re-run a command from its manifest");
  rp->add_option("--manifest", manifest_path, "manifest.json")->required();
  rp->add_option("--out", replay_out, "output directory (default: the recorded one)");
  rp->add_option("--workers", replay_workers, "override the recorded worker count");

  std::vector<const char*> argv{"pscontour"};
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : static_cast<int>(ExitCode::input_error);
  }

  if (rp->parsed()) return cmd_replay(manifest_path, replay_out, replay_workers);

  CLI::App* cmd = app.get_subcommands().front();
  Output out(common, cmd->get_name(), recordable(args));
  int code = 0;
  try {
    if (cmd == mc)
      code = cmd_model_check(common, out);
    else if (cmd == ct)
      code = cmd_contours(common, config_path, out);
    else if (cmd == vf)
      code = cmd_verify(common, box_s, betas_s, exterior, out);
    else if (cmd == cs)
      code = cmd_census(common, d, r, n_max, contour_mode, out);
    else if (cmd == sp)
      code = cmd_sample(common, sample, out);
    else if (cmd == cx)
      code = cmd_coexist(common, boxes_s, betas_s, site_s, out);
  } catch (const Error& e) {
    out.parameters()["error"] = e.what();
    out.finish(static_cast<int>(e.exit_code()));
    throw;
  }
  out.finish(code);
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  try {
    return run(args);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return static_cast<int>(e.exit_code());
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return static_cast<int>(ExitCode::input_error);
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return 70;
  }
}
