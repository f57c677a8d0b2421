#include "mrf/cli.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include <omp.h>

#include <CLI11.hpp>

#include "mrf/agm.hpp"
#include "mrf/bench.hpp"
#include "mrf/bp.hpp"
#include "mrf/data.hpp"
#include "mrf/egm.hpp"
#include "mrf/ensemble.hpp"
#include "mrf/errors.hpp"
#include "mrf/gibbs.hpp"
#include "mrf/store.hpp"

#ifndef MRF_BUILD_ID
#define MRF_BUILD_ID "unknown"
#endif

namespace mrf::cli {

namespace fs = std::filesystem;

namespace {

struct Manifest {
  std::string command;
  std::vector<std::pair<std::string, std::string>> entries;
  std::vector<std::string> outputs;
  double t0 = omp_get_wtime();

  void add(const std::string& k, const std::string& v) { entries.push_back({k, v}); }
  void output(const std::string& path) { outputs.push_back(path); }

  // Written only on success, atomically via rename, so a failed run never
  // leaves a partial manifest behind.
  void write(const std::string& out_dir) {
    for (const auto& p : outputs)
      if (!fs::exists(p)) throw IoError("manifest: missing output " + p);
    const fs::path final_path = fs::path(out_dir) / "manifest.txt";
    const fs::path tmp = fs::path(out_dir) / ".manifest.tmp";
    {
      std::ofstream out(tmp);
      out << "command " << command << "\n";
      out << "build " << MRF_BUILD_ID << "\n";
      for (auto& [k, v] : entries) out << k << " " << v << "\n";
      out << "wall_seconds " << (omp_get_wtime() - t0) << "\n";
      for (const auto& p : outputs) out << "output " << p << "\n";
      if (!out) throw IoError("manifest: write failed");
    }
    fs::rename(tmp, final_path);
  }
};

std::map<std::string, std::string> parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open " + path);
  std::map<std::string, std::string> kv;
  std::string line;
  long ln = 0;
  while (std::getline(in, line)) {
    ++ln;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError("config: expected key=value", ln);
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      const auto e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  return kv;
}

template <class T>
void set_num(const std::map<std::string, std::string>& kv, const std::string& key, T& field) {
  auto it = kv.find(key);
  if (it == kv.end()) return;
  field = static_cast<T>(std::stod(it->second));
}

agm::AgmConfig agm_config_from(const std::map<std::string, std::string>& kv) {
  agm::AgmConfig c;
  for (auto& [k, v] : kv) {
    (void)v;
    if (k != "lambda" && k != "critic_steps" && k != "bp_steps" && k != "batch_size" &&
        k != "total_steps" && k != "lr" && k != "adam_beta1" && k != "adam_beta2" &&
        k != "adam_eps" && k != "seed" && k != "checkpoint_every" && k != "latent_dim")
      throw ConfigError("config: unknown key '" + k + "'");
  }
  set_num(kv, "lambda", c.lambda);
  set_num(kv, "critic_steps", c.critic_steps);
  set_num(kv, "bp_steps", c.bp_steps);
  set_num(kv, "batch_size", c.batch_size);
  set_num(kv, "total_steps", c.total_steps);
  set_num(kv, "lr", c.lr);
  set_num(kv, "adam_beta1", c.adam_beta1);
  set_num(kv, "adam_beta2", c.adam_beta2);
  set_num(kv, "adam_eps", c.adam_eps);
  set_num(kv, "seed", c.seed);
  set_num(kv, "checkpoint_every", c.checkpoint_every);
  set_num(kv, "latent_dim", c.latent_dim);
  return c;
}

egm::EgmConfig egm_config_from(const std::map<std::string, std::string>& kv) {
  egm::EgmConfig c;
  for (auto& [k, v] : kv) {
    (void)v;
    if (k != "bp_steps" && k != "lr" && k != "batch_size" && k != "total_steps" && k != "seed" &&
        k != "checkpoint_every" && k != "adam_beta1" && k != "adam_beta2" && k != "adam_eps")
      throw ConfigError("config: unknown key '" + k + "'");
  }
  set_num(kv, "bp_steps", c.bp_steps);
  set_num(kv, "lr", c.lr);
  set_num(kv, "batch_size", c.batch_size);
  set_num(kv, "total_steps", c.total_steps);
  set_num(kv, "seed", c.seed);
  set_num(kv, "checkpoint_every", c.checkpoint_every);
  set_num(kv, "adam_beta1", c.adam_beta1);
  set_num(kv, "adam_beta2", c.adam_beta2);
  set_num(kv, "adam_eps", c.adam_eps);
  return c;
}

std::vector<int> parse_int_list(const std::string& text) {
  std::vector<int> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(std::stoi(item));
  if (out.empty()) throw ConfigError("expected a comma-separated integer list");
  return out;
}

std::optional<std::pair<int, int>> parse_image_shape(const std::string& text) {
  if (text.empty()) return std::nullopt;
  const auto x = text.find('x');
  if (x == std::string::npos) throw ConfigError("image shape: expected HxW");
  return std::pair{std::stoi(text.substr(0, x)), std::stoi(text.substr(x + 1))};
}

void require_file(const std::string& path, const std::string& what) {
  if (path.empty() || !fs::exists(path)) throw ConfigError(what + " not found: " + path);
}

void write_trace_csv(const std::string& path, const std::vector<egm::TraceRow>& trace) {
  std::ofstream out(path);
  out << "step,loss\n";
  out.precision(17);
  for (auto& r : trace) out << r.step << "," << r.loss << "\n";
}

void write_trace_csv(const std::string& path, const std::vector<agm::TraceRow>& trace) {
  std::ofstream out(path);
  out << "step,critic_loss,generator_loss,penalty\n";
  out.precision(17);
  for (auto& r : trace)
    out << r.step << "," << r.critic_loss << "," << r.generator_loss << "," << r.penalty << "\n";
}

void write_eval_csvs(const std::string& out_dir, const ensemble::EvalResult& res,
                     Manifest& man) {
  const std::string report = (fs::path(out_dir) / "report.csv").string();
  {
    std::ofstream out(report);
    out << "query_id,n_query_vars,n_correct\n";
    for (auto& q : res.queries) out << q.id << "," << q.n_query << "," << q.n_correct << "\n";
    out << "# accuracy " << res.accuracy << "\n";
  }
  man.output(report);
  const std::string preds = (fs::path(out_dir) / "predictions.csv").string();
  {
    std::ofstream out(preds);
    out << "query_id,node,predicted,truth,scores\n";
    out.precision(17);
    for (auto& p : res.predictions) {
      out << p.query_id << "," << p.node << "," << p.predicted << "," << p.truth;
      for (double s : p.scores) out << "," << s;
      out << "\n";
    }
  }
  man.output(preds);
}

void write_samples(const std::string& path, const std::vector<Assignment>& samples,
                   const std::string& structure_path, const std::string& checkpoint_path) {
  std::ofstream out(path);
  out << "# structure " << structure_path << " checkpoint " << checkpoint_path << "\n";
  for (auto& s : samples) {
    for (std::size_t i = 0; i < s.size(); ++i) out << (i ? " " : "") << s[i];
    out << "\n";
  }
}

int thread_cap_from_env() {
  const char* env = std::getenv("MRF_THREADS");
  if (!env) return 0;
  const int n = std::atoi(env);
  return n > 0 ? n : 0;
}

struct CommonOpts {
  std::string config, dataset, structure, checkpoint, task, out_dir = "out";
  std::string image_shape;
  int ensemble_size = 1000;
  int bp_steps = -1;
  int queries = 1000;
  std::uint64_t seed = 1;
  bool seed_given = false;
};

}  // namespace

int run(const std::vector<std::string>& args) {
  const int cap = thread_cap_from_env();
  if (cap > 0) omp_set_num_threads(cap);

  CLI::App app{"Adversarially and ERM-trained pairwise graphical models"};
  app.require_subcommand(1);
  CommonOpts o;

  auto add_common = [&](CLI::App* cmd, bool with_task) {
    cmd->add_option("--out-dir", o.out_dir, "output directory");
    auto* s = cmd->add_option("--seed", o.seed, "seed override");
    s->each([&](const std::string&) { o.seed_given = true; });
    if (with_task) cmd->add_option("--task", o.task, "task spec, e.g. fractional=0.7");
    cmd->add_option("--image-shape", o.image_shape, "HxW for window/quadrant tasks");
    return cmd;
  };

  auto* c_train_agm = add_common(app.add_subcommand("train-agm", "adversarial training"), false);
  c_train_agm->add_option("--config", o.config);
  c_train_agm->add_option("--dataset", o.dataset)->required();
  c_train_agm->add_option("--structure", o.structure)->required();

  auto* c_train_egm = add_common(app.add_subcommand("train-egm", "ERM training"), true);
  c_train_egm->add_option("--config", o.config);
  c_train_egm->add_option("--dataset", o.dataset)->required();
  c_train_egm->add_option("--structure", o.structure)->required();

  auto* c_infer = add_common(app.add_subcommand("infer", "evaluate a task"), true);
  c_infer->add_option("--checkpoint", o.checkpoint)->required();
  c_infer->add_option("--structure", o.structure)->required();
  c_infer->add_option("--dataset", o.dataset)->required();
  auto* m_opt = c_infer->add_option("--ensemble-size", o.ensemble_size);
  c_infer->add_option("--bp-steps", o.bp_steps);
  c_infer->add_option("--queries", o.queries);

  auto* c_sample = add_common(app.add_subcommand("sample", "draw samples"), false);
  std::string mode = "agm-oneshot";
  int n_samples = 16, burn = 0;
  c_sample->add_option("--checkpoint", o.checkpoint)->required();
  c_sample->add_option("--structure", o.structure)->required();
  c_sample->add_option("--mode", mode, "agm-oneshot | gibbs");
  c_sample->add_option("--n", n_samples);
  c_sample->add_option("--burn", burn, "gibbs burn-in sweeps");
  c_sample->add_option("--bp-steps", o.bp_steps);

  auto* c_distill = add_common(app.add_subcommand("distill", "sample-quality score"), false);
  int distill_n = 1000;
  c_distill->add_option("--checkpoint", o.checkpoint)->required();
  c_distill->add_option("--structure", o.structure)->required();
  c_distill->add_option("--dataset", o.dataset, "real test split")->required();
  c_distill->add_option("--n", distill_n, "samples to draw");
  c_distill->add_option("--burn", burn);
  c_distill->add_option("--queries", o.queries);
  c_distill->add_option("--bp-steps", o.bp_steps);

  auto* c_sweep = add_common(app.add_subcommand("sweep-M", "accuracy vs ensemble size"), true);
  std::string m_list = "10,100,1000";
  c_sweep->add_option("--checkpoint", o.checkpoint)->required();
  c_sweep->add_option("--structure", o.structure)->required();
  c_sweep->add_option("--dataset", o.dataset)->required();
  c_sweep->add_option("--m-list", m_list);
  c_sweep->add_option("--queries", o.queries);
  c_sweep->add_option("--bp-steps", o.bp_steps);

  auto* c_bench = add_common(app.add_subcommand("bench-bp", "BP timing sweeps"), false);
  std::string edge_list = "1536,3072,6144,12288", t_list = "4,8,16,32";
  int bench_batch = 16;
  c_bench->add_option("--edge-list", edge_list);
  c_bench->add_option("--t-list", t_list);
  c_bench->add_option("--batch", bench_batch);

  auto* c_make = add_common(app.add_subcommand("make-data", "synthetic dataset"), false);
  std::string spec, out_file;
  int make_n = 1000;
  c_make->add_option("--spec", spec)->required();
  c_make->add_option("--n", make_n);
  c_make->add_option("--out", out_file)->required();

  try {
    std::vector<std::string> rev(args.rbegin(), args.rend());
    app.parse(rev);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  Manifest man;
  {
    std::ostringstream cmd;
    cmd << "mrfcli";
    for (auto& a : args) cmd << " " << a;
    man.command = cmd.str();
  }

  try {
    fs::create_directories(o.out_dir);

    if (*c_train_agm) {
      require_file(o.dataset, "dataset");
      require_file(o.structure, "structure");
      agm::AgmConfig cfg =
          o.config.empty() ? agm::AgmConfig{} : agm_config_from(parse_config_file(o.config));
      if (o.seed_given) cfg.seed = o.seed;
      GraphStructure g = load_structure(o.structure);
      Dataset data = load_dataset(o.dataset);
      const std::string state_path = (fs::path(o.out_dir) / "state_latest.ckpt").string();
      agm::AgmResult res =
          agm::train_agm(data, g, cfg, [&](long step, const agm::AgmTrainState& s) {
            store::TrainStateBlob blob{s.learner, s.disc, s.opt_learner, s.opt_disc, step};
            store::save_train_state(blob, g.n_nodes, g.support_size, state_path, cfg.seed);
          });
      const std::string learner_path = (fs::path(o.out_dir) / "learner.ckpt").string();
      const std::string disc_path = (fs::path(o.out_dir) / "disc.ckpt").string();
      const std::string trace_path = (fs::path(o.out_dir) / "trace.csv").string();
      store::save_learner(res.learner, g.n_nodes, g.support_size, learner_path, cfg.seed);
      store::save_discriminator(res.disc, disc_path, cfg.seed);
      write_trace_csv(trace_path, res.trace);
      man.add("seed", std::to_string(cfg.seed));
      man.add("config", "lambda=" + std::to_string(cfg.lambda) +
                            " critic_steps=" + std::to_string(cfg.critic_steps) +
                            " bp_steps=" + std::to_string(cfg.bp_steps) +
                            " batch_size=" + std::to_string(cfg.batch_size) +
                            " total_steps=" + std::to_string(cfg.total_steps) +
                            " lr=" + std::to_string(cfg.lr));
      man.output(learner_path);
      man.output(disc_path);
      man.output(trace_path);
      man.output(state_path);
      man.write(o.out_dir);
      std::cout << "trained AGM for " << cfg.total_steps << " steps -> " << learner_path << "\n";
    } else if (*c_train_egm) {
      require_file(o.dataset, "dataset");
      require_file(o.structure, "structure");
      egm::EgmConfig cfg =
          o.config.empty() ? egm::EgmConfig{} : egm_config_from(parse_config_file(o.config));
      if (o.seed_given) cfg.seed = o.seed;
      GraphStructure g = load_structure(o.structure);
      Dataset data = load_dataset(o.dataset);
      TaskList tasks = parse_task_list(o.task.empty() ? "fractional=0.5" : o.task);
      auto shape = parse_image_shape(o.image_shape);
      for (auto& t : tasks.specs) t.image_shape = shape;
      Curriculum cur = tasks.exclude ? Curriculum(tasks.specs, *tasks.exclude)
                                     : Curriculum(tasks.specs);
      const std::string ckpt_path = (fs::path(o.out_dir) / "egm.ckpt").string();
      egm::EgmResult res =
          egm::train_egm(data, g, cur, cfg, [&](long step, const LogPotentials& psi) {
            (void)step;
            store::save_potentials(psi, g, ckpt_path, o.structure, cfg.seed);
          });
      store::save_potentials(res.psi, g, ckpt_path, o.structure, cfg.seed);
      const std::string trace_path = (fs::path(o.out_dir) / "trace.csv").string();
      write_trace_csv(trace_path, res.trace);
      man.add("seed", std::to_string(cfg.seed));
      man.add("config", "bp_steps=" + std::to_string(cfg.bp_steps) +
                            " lr=" + std::to_string(cfg.lr) +
                            " batch_size=" + std::to_string(cfg.batch_size) +
                            " total_steps=" + std::to_string(cfg.total_steps));
      man.add("task", o.task.empty() ? "fractional=0.5" : o.task);
      man.output(ckpt_path);
      man.output(trace_path);
      man.write(o.out_dir);
      std::cout << "trained EGM for " << cfg.total_steps << " steps -> " << ckpt_path << "\n";
    } else if (*c_infer) {
      require_file(o.checkpoint, "checkpoint");
      require_file(o.structure, "structure");
      require_file(o.dataset, "dataset");
      if (o.queries < 1) throw ConfigError("infer: --queries must be >= 1");
      GraphStructure g = load_structure(o.structure);
      Dataset data = load_dataset(o.dataset);
      TaskSpec task = parse_task_spec(o.task.empty() ? "fractional=0.7" : o.task);
      task.image_shape = parse_image_shape(o.image_shape);
      store::Header hd = store::peek(o.checkpoint);
      ensemble::EnsembleConfig ec;
      ec.M = o.ensemble_size;
      ec.seed = o.seed;

      ensemble::EvalResult res;
      if (hd.kind == store::Kind::Learner) {
        ec.bp_steps = o.bp_steps > 0 ? o.bp_steps : 5;
        LearnerParams lp = store::load_learner(o.checkpoint);
        Rng rng = make_rng(derive_seed(o.seed, 0x91));
        Tensor members = ensemble::sample_members(lp, ec.M, rng);
        res = ensemble::evaluate_task(g, members, data, task, o.queries, ec);
      } else if (hd.kind == store::Kind::Potentials) {
        if (m_opt->count() > 0)
          std::cout << "warning: --ensemble-size ignored for a potentials checkpoint\n";
        ec.bp_steps = o.bp_steps > 0 ? o.bp_steps : 25;
        LogPotentials psi = store::load_potentials(o.checkpoint, g);
        res = ensemble::evaluate_task(g, psi, data, task, o.queries, ec);
      } else {
        throw ConfigError("infer: checkpoint must hold a learner or potentials");
      }
      write_eval_csvs(o.out_dir, res, man);
      man.add("seed", std::to_string(o.seed));
      man.add("task", task.str());
      man.add("accuracy", std::to_string(res.accuracy));
      man.write(o.out_dir);
      std::cout << "accuracy " << res.accuracy << " over " << res.total_vars
                << " query variables\n";
    } else if (*c_sample) {
      require_file(o.checkpoint, "checkpoint");
      require_file(o.structure, "structure");
      GraphStructure g = load_structure(o.structure);
      auto shape = parse_image_shape(o.image_shape);
      std::vector<Assignment> samples;
      std::vector<std::vector<double>> mean_maps;

      if (mode == "agm-oneshot") {
        LearnerParams lp = store::load_learner(o.checkpoint);
        const int t = o.bp_steps > 0 ? o.bp_steps : 5;
        Rng rng = make_rng(derive_seed(o.seed, 0x92));
        Tensor members = ensemble::sample_members(lp, n_samples, rng);
        std::vector<Evidence> ev = {Evidence{}};
        std::vector<Marginals> beliefs = bp::batch_inference(g, members, ev, t);
        const std::string marg_path = (fs::path(o.out_dir) / "marginals.csv").string();
        std::ofstream marg(marg_path);
        marg.precision(17);
        for (auto& m : beliefs) {
          Assignment a(g.n_nodes);
          std::vector<double> p1(g.n_nodes);
          for (int n = 0; n < g.n_nodes; ++n) {
            int best = 0;
            for (int x = 1; x < g.support_size; ++x)
              if (m.beliefs(n, x) > m.beliefs(n, best)) best = x;
            a[n] = best;
            p1[n] = g.support_size == 2 ? m.beliefs(n, 1) : m.beliefs(n, best);
          }
          samples.push_back(std::move(a));
          mean_maps.push_back(std::move(p1));
          for (std::size_t i = 0; i < m.beliefs.size(); ++i)
            marg << (i ? "," : "") << m.beliefs[i];
          marg << "\n";
        }
        man.output(marg_path);
      } else if (mode.rfind("gibbs", 0) == 0) {
        LogPotentials psi = store::load_potentials(o.checkpoint, g);
        gibbs::GibbsConfig gc;
        gc.burn_in = burn;
        gc.seed = derive_seed(o.seed, 0x93);
        samples = gibbs::sample(g, psi, gc, n_samples);
        for (auto& s : samples) {
          std::vector<double> p1(s.begin(), s.end());
          if (g.support_size > 2)
            for (auto& v : p1) v /= (g.support_size - 1);
          mean_maps.push_back(std::move(p1));
        }
      } else {
        throw ConfigError("sample: unknown mode '" + mode + "'");
      }

      const std::string dump_path = (fs::path(o.out_dir) / "samples.txt").string();
      write_samples(dump_path, samples, o.structure, o.checkpoint);
      man.output(dump_path);
      if (shape) {
        const std::string grid_path = (fs::path(o.out_dir) / "grid.pgm").string();
        write_pgm_grid(grid_path, mean_maps, shape->first, shape->second);
        man.output(grid_path);
      }
      man.add("seed", std::to_string(o.seed));
      man.add("mode", mode);
      man.write(o.out_dir);
      std::cout << "wrote " << samples.size() << " samples -> " << dump_path << "\n";
    } else if (*c_distill) {
      require_file(o.checkpoint, "checkpoint");
      require_file(o.structure, "structure");
      require_file(o.dataset, "dataset");
      GraphStructure g = load_structure(o.structure);
      Dataset test = load_dataset(o.dataset);
      store::Header hd = store::peek(o.checkpoint);

      Dataset sampled;
      sampled.n_vars = g.n_nodes;
      sampled.support_size = g.support_size;
      if (hd.kind == store::Kind::Learner) {
        LearnerParams lp = store::load_learner(o.checkpoint);
        const int t = o.bp_steps > 0 ? o.bp_steps : 5;
        Rng rng = make_rng(derive_seed(o.seed, 0x94));
        Tensor members = ensemble::sample_members(lp, distill_n, rng);
        std::vector<Evidence> ev = {Evidence{}};
        std::vector<Marginals> beliefs = bp::batch_inference(g, members, ev, t);
        for (auto& m : beliefs) {
          Assignment a(g.n_nodes);
          for (int n = 0; n < g.n_nodes; ++n) {
            int best = 0;
            for (int x = 1; x < g.support_size; ++x)
              if (m.beliefs(n, x) > m.beliefs(n, best)) best = x;
            a[n] = best;
          }
          sampled.rows.push_back(std::move(a));
        }
      } else if (hd.kind == store::Kind::Potentials) {
        LogPotentials psi = store::load_potentials(o.checkpoint, g);
        gibbs::GibbsConfig gc;
        gc.burn_in = burn;
        gc.seed = derive_seed(o.seed, 0x95);
        sampled.rows = gibbs::sample(g, psi, gc, distill_n);
      } else {
        throw ConfigError("distill: checkpoint must hold a learner or potentials");
      }

      const std::string samples_path = (fs::path(o.out_dir) / "distill_samples.txt").string();
      write_samples(samples_path, sampled.rows, o.structure, o.checkpoint);
      man.output(samples_path);

      egm::EgmConfig ec;
      ec.seed = derive_seed(o.seed, 0x96);
      Curriculum cur{{TaskSpec{TaskKind::Fractional, 0.5, std::nullopt}}};
      egm::EgmResult fresh = egm::train_egm(sampled, g, cur, ec);
      ensemble::EnsembleConfig eval_cfg;
      eval_cfg.bp_steps = ec.bp_steps;
      eval_cfg.seed = derive_seed(o.seed, 0x97);
      ensemble::EvalResult res = ensemble::evaluate_task(
          g, fresh.psi, test, TaskSpec{TaskKind::Fractional, 0.5, std::nullopt}, o.queries,
          eval_cfg);

      const std::string score_path = (fs::path(o.out_dir) / "distill.csv").string();
      {
        std::ofstream out(score_path);
        out << "sampler,score\n";
        out << (hd.kind == store::Kind::Learner ? "agm-oneshot" : "gibbs-burn" + std::to_string(burn))
            << "," << res.accuracy << "\n";
      }
      man.output(score_path);
      man.add("seed", std::to_string(o.seed));
      man.add("score", std::to_string(res.accuracy));
      man.write(o.out_dir);
      std::cout << "distillation score " << res.accuracy << "\n";
    } else if (*c_sweep) {
      require_file(o.checkpoint, "checkpoint");
      require_file(o.structure, "structure");
      require_file(o.dataset, "dataset");
      GraphStructure g = load_structure(o.structure);
      Dataset data = load_dataset(o.dataset);
      TaskSpec task = parse_task_spec(o.task.empty() ? "fractional=0.7" : o.task);
      task.image_shape = parse_image_shape(o.image_shape);
      LearnerParams lp = store::load_learner(o.checkpoint);
      ensemble::EnsembleConfig ec;
      ec.seed = o.seed;
      ec.bp_steps = o.bp_steps > 0 ? o.bp_steps : 5;
      auto rows = ensemble::sweep_ensemble_size(g, lp, data, task, o.queries,
                                                parse_int_list(m_list), ec);
      const std::string path = (fs::path(o.out_dir) / "sweep.csv").string();
      {
        std::ofstream out(path);
        out << "M,accuracy\n";
        for (auto& [m, acc] : rows) out << m << "," << acc << "\n";
      }
      man.output(path);
      man.add("seed", std::to_string(o.seed));
      man.write(o.out_dir);
      for (auto& [m, acc] : rows) std::cout << "M=" << m << " accuracy=" << acc << "\n";
    } else if (*c_bench) {
      auto rows = bench::bench_bp(parse_int_list(edge_list), parse_int_list(t_list), bench_batch,
                                  o.seed);
      const std::string path = (fs::path(o.out_dir) / "bench.csv").string();
      {
        std::ofstream out(path);
        out << "n_edges,max_degree,t,batch,serial_ms,parallel_ms\n";
        for (auto& r : rows)
          out << r.n_edges << "," << r.max_degree << "," << r.t << "," << r.batch << ","
              << r.serial_ms << "," << r.parallel_ms << "\n";
      }
      man.output(path);
      bench::ScalingCheck chk = bench::check_scaling(rows);
      std::ostringstream ratios;
      ratios << "t:";
      for (double r : chk.t_ratios) ratios << " " << r;
      ratios << " |E|:";
      for (double r : chk.edge_ratios) ratios << " " << r;
      man.add("ratios", ratios.str());
      man.write(o.out_dir);
      std::cout << "scaling ratios " << ratios.str() << "\n";
      if (!chk.ok) {
        std::cerr << "scaling outside linear bands: " << chk.detail << "\n";
        return 1;
      }
    } else if (*c_make) {
      Dataset d = make_synthetic_dataset(spec, make_n, o.seed);
      save_dataset(d, out_file);
      man.add("spec", spec);
      man.add("seed", std::to_string(o.seed));
      man.output(out_file);
      man.write(o.out_dir);
      std::cout << "wrote " << d.size() << " points -> " << out_file << "\n";
    }
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace mrf::cli
