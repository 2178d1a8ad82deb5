// votenet: dataset synthesis, training, evaluation and sweeps for the
// voting segmentation network.
#include <CLI11.hpp>

#include <iostream>

#include "votenet/autodiff/tensor.hpp"
#include "votenet/cli/checkpoint.hpp"
#include "votenet/cli/commands.hpp"
#include "votenet/cli/config.hpp"
#include "votenet/cli/training.hpp"
#include "votenet/data/raster.hpp"

namespace cli = votenet::cli;

namespace {

struct CommonFlags {
  std::string config_path;
  std::uint64_t seed = 0;
  std::string out;
  std::string data;
  std::string checkpoint;
  std::vector<std::string> overrides;
};

void add_common(CLI::App* app, CommonFlags& flags) {
  app->add_option("--config", flags.config_path, "Config file (key = value with [sections])");
  app->add_option("--seed", flags.seed, "Run seed (overrides run.seed)");
  app->add_option("--out", flags.out, "Output directory (overrides run.out)");
  app->add_option("--data", flags.data, "Dataset root (overrides run.data)");
  app->add_option("--checkpoint", flags.checkpoint,
                  "Checkpoint path(s), comma-separated (overrides run.checkpoint)");
  app->add_option("--set", flags.overrides, "Override any key: section.key=value (repeatable)");
}

// Precedence: built-in defaults < config file < --set overrides < dedicated flags.
cli::RunConfig resolve(const CLI::App* app, const CommonFlags& flags) {
  cli::RunConfig config;
  if (!flags.config_path.empty()) config = cli::load_config(flags.config_path);
  for (const std::string& o : flags.overrides) cli::apply_override(config, o);
  if (app->count("--seed") > 0) config.seed = flags.seed;
  if (!flags.out.empty()) config.out = flags.out;
  if (!flags.data.empty()) config.data = flags.data;
  if (!flags.checkpoint.empty()) config.checkpoint = flags.checkpoint;
  return config;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Voting segmentation network: synth, sample, train, eval, gradcheck, sweep, render"};
  app.require_subcommand(1);
  CommonFlags flags;

  CLI::App* synth = app.add_subcommand("synth", "Generate synthetic train/eval scenes and patches");
  CLI::App* sample = app.add_subcommand("sample", "Sample patches from one scene raster");
  std::string scene_stem;
  bool augment = false;
  sample->add_option("scene", scene_stem, "Scene stem (path without _image.png)")->required();
  sample->add_flag("--augment", augment, "Add the rotated copies of every patch");
  CLI::App* train = app.add_subcommand("train", "Train a model on <data>/train");
  CLI::App* eval = app.add_subcommand("eval", "Evaluate a checkpoint on <data>/eval");
  CLI::App* gradcheck = app.add_subcommand("gradcheck", "Run the finite-difference gradient suite");
  bool inject_bug = false;
  gradcheck->add_flag("--inject-bug", inject_bug, "Append a case with a deliberately wrong adjoint");
  CLI::App* sweep = app.add_subcommand("sweep", "Stride or lambda sweep table");
  std::string kind;
  sweep->add_option("kind", kind, "stride or lambda")->required()->check(CLI::IsMember({"stride", "lambda"}));
  CLI::App* render = app.add_subcommand("render", "Overlay the prediction for one RGB PNG");
  std::string image;
  render->add_option("image", image, "RGB PNG to segment")->required();
  CLI::App* show = app.add_subcommand("config", "Print the effective configuration");

  for (CLI::App* sub : {synth, sample, train, eval, gradcheck, sweep, render, show}) add_common(sub, flags);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? cli::kExitOk : cli::kExitValidation;
  }

  CLI::App* active = app.get_subcommands().front();
  try {
    const cli::RunConfig config = resolve(active, flags);
    if (active == synth) return cli::cmd_synth(config, std::cout);
    if (active == sample) return cli::cmd_sample(config, scene_stem, augment, std::cout);
    if (active == train) return cli::cmd_train(config, std::cout);
    if (active == eval) return cli::cmd_eval(config, std::cout);
    if (active == gradcheck) return cli::cmd_gradcheck(config, inject_bug, std::cout);
    if (active == sweep) return cli::cmd_sweep(config, cli::parse_sweep_kind(kind), std::cout);
    if (active == render) return cli::cmd_render(config, image, std::cout);
    config.validate();
    std::cout << cli::serialize_config(config);
    return cli::kExitOk;
  } catch (const cli::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return cli::kExitValidation;
  } catch (const cli::CheckpointError& e) {
    std::cerr << "checkpoint error: " << e.what() << '\n';
    return cli::kExitValidation;
  } catch (const std::invalid_argument& e) {
    std::cerr << "invalid input: " << e.what() << '\n';
    return cli::kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return cli::kExitRuntime;
  }
}
