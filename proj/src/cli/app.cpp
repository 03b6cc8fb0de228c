#include <ostream>

#include "CLI11.hpp"
#include "dstsa/cli/commands.hpp"
#include "dstsa/errors.hpp"
#include "dstsa/nn/checkpoint.hpp"
#include "dstsa/tensor/parallel.hpp"

namespace dstsa::cli {

namespace {

// Options shared by every command that builds a RunConfig.
struct ConfigFlags {
  std::string config_file;
  std::vector<std::string> sets;
  std::optional<std::uint64_t> seed;

  void add_to(CLI::App& cmd) {
    cmd.add_option("--config", config_file, "key = value config file")->check(CLI::ExistingFile);
    cmd.add_option("--set", sets, "override one key, e.g. --set model.groups=4")
        ->type_name("KEY=VALUE");
    cmd.add_option("--seed", seed, "sets train.seed");
  }

  // Defaults (or `base`), then the file, then --set, then --seed.
  RunConfig build(RunConfig base = {}) const {
    if (!config_file.empty()) apply_config_text(base, read_text_file(config_file));
    apply_overrides(base, sets);
    if (seed) base.train.seed = *seed;
    return base;
  }

  std::vector<std::string> as_overrides() const {
    auto all = sets;
    if (!config_file.empty()) {
      RunConfig probe;
      apply_config_text(probe, read_text_file(config_file));
      // Re-express the file as overrides so it layers over a checkpoint's config.
      std::vector<std::string> from_file;
      const RunConfig defaults;
      for (const auto& key : config_keys()) {
        const auto v = get_value(probe, key);
        if (v != get_value(defaults, key)) from_file.push_back(key + "=" + v);
      }
      all.insert(all.begin(), from_file.begin(), from_file.end());
    }
    if (seed) all.push_back("train.seed=" + std::to_string(*seed));
    return all;
  }
};

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Skeleton gesture recognition with dynamic spatio-temporal graph convolutions"};
  app.name("dstsa");
  app.require_subcommand(1);
  int threads = 0;
  app.add_option("--threads", threads, "worker threads (default: DSTSA_THREADS or all cores)");

  // train
  auto* train = app.add_subcommand("train", "train a model and write checkpoints and logs");
  ConfigFlags train_flags;
  train_flags.add_to(*train);
  bool synthetic = false;
  std::optional<std::size_t> classes, epochs, checkpoint_every;
  std::string modality, data_root, resume;
  TrainRequest train_req;
  std::string out_dir = "run";
  train->add_flag("--synthetic", synthetic, "use the generated synthetic gesture set");
  train->add_option("--classes", classes, "synthetic class count (also sets model.num_classes)");
  train->add_option("--epochs", epochs, "sets train.epochs");
  train->add_option("--modality", modality, "joint, bone, joint_motion or bone_motion");
  train->add_option("--data-root", data_root, "SHREC'17 root directory (sets data.source=shrec)");
  train->add_option("--checkpoint-every", checkpoint_every, "sets train.checkpoint_every");
  train->add_option("--out", out_dir, "output directory")->capture_default_str();
  train->add_option("--resume", resume, "continue from a checkpoint")->check(CLI::ExistingFile);
  train->add_option("--stop-after", train_req.stop_after, "stop after this many epochs");

  // eval
  auto* eval = app.add_subcommand("eval", "score checkpoints and their fusion");
  EvalRequest eval_req;
  ConfigFlags eval_flags;
  eval_flags.add_to(*eval);
  std::string eval_out;
  eval->add_option("--checkpoint", eval_req.checkpoints, "checkpoint, one per modality")
      ->required();
  eval->add_option("--weights", eval_req.weights, "fusion weights, one per checkpoint")
      ->delimiter(',');
  eval->add_option("--split", eval_req.split, "val or train")->capture_default_str();
  eval->add_option("--out", eval_out, "directory for confusion CSVs and eval.json");

  // verify
  auto* verify = app.add_subcommand("verify", "run gradient checks, oracles and invariants");
  std::string fault;
  verify->add_option("--inject-fault", fault, "tanh-sign-flip: corrupt the tanh backward pass")
      ->check(CLI::IsMember({"tanh-sign-flip"}));

  // export
  auto* exp = app.add_subcommand("export", "write topology graphs or class activation maps");
  ExportRequest exp_req;
  ConfigFlags exp_flags;
  exp_flags.add_to(*exp);
  std::string exp_out;
  std::optional<std::size_t> exp_class;
  exp->add_option("--checkpoint", exp_req.checkpoint, "checkpoint to read")->required();
  exp->add_option("--what", exp_req.what, "topology or cam")->capture_default_str();
  exp->add_option("--kind", exp_req.kind, "static, channel or temporal")->capture_default_str();
  exp->add_option("--layer", exp_req.layer, "block name (default: last block)");
  exp->add_option("--sample", exp_req.sample, "sample index for dynamic graphs and CAM");
  exp->add_option("--class", exp_class, "CAM class (default: predicted)");
  exp->add_option("--format", exp_req.format, "csv or json")->capture_default_str();
  exp->add_option("--split", exp_req.split, "val or train")->capture_default_str();
  exp->add_option("--out", exp_out, "output file")->required();

  // summary
  auto* summary = app.add_subcommand("summary", "print the parameter and mult-add table");
  ConfigFlags summary_flags;
  summary_flags.add_to(*summary);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n" << "run 'dstsa --help' for usage\n";
    return kExitUsage;
  }

  try {
    if (threads > 0) set_worker_count(threads);
    if (train->parsed()) {
      RunConfig base;
      if (!resume.empty()) {
        train_req.resume = true;
        train_req.resume_from = resume;
        apply_config_text(base, nn::load_checkpoint(resume).config);
      }
      RunConfig cfg = train_flags.build(base);
      if (synthetic) cfg.data.source = "synthetic";
      if (classes) {
        cfg.data.synthetic.classes = *classes;
        cfg.model.num_classes = *classes;
      }
      if (!data_root.empty()) {
        cfg.data.source = "shrec";
        cfg.data.root = data_root;
        cfg.model.num_classes = static_cast<std::size_t>(cfg.train.label_set);
      }
      if (epochs) cfg.train.schedule.epochs = *epochs;
      if (checkpoint_every) cfg.checkpoint_every = *checkpoint_every;
      if (!modality.empty()) set_value(cfg, "train.modality", modality);
      train_req.config = cfg;
      train_req.out_dir = out_dir;
      return cmd_train(train_req, out);
    }
    if (eval->parsed()) {
      eval_req.overrides = eval_flags.as_overrides();
      if (!eval_out.empty()) eval_req.out_dir = eval_out;
      return cmd_eval(eval_req, out);
    }
    if (verify->parsed()) return cmd_verify(!fault.empty(), out);
    if (exp->parsed()) {
      exp_req.overrides = exp_flags.as_overrides();
      exp_req.cls = exp_class;
      exp_req.out = exp_out;
      return cmd_export(exp_req, out);
    }
    if (summary->parsed()) return cmd_summary(summary_flags.build(), out);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const InputError& e) {
    err << "input error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const IntegrityError& e) {
    err << "integrity error: " << e.what() << "\n";
    return kExitFailure;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitUsage;
}

}  // namespace dstsa::cli
