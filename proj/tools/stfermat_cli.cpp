#include <stfermat/commands.hpp>

#include <CLI11.hpp>

#include <cstdlib>
#include <optional>
#include <string>

int main(int argc, char** argv)
{
  CLI::App app{"Fixed-energy arrival-time geodesics in stationary spacetimes"};
  app.require_subcommand(1);

  std::string file;
  std::string out_dir;
  std::optional<int> segments;
  std::optional<std::uint64_t> seed;
  bool quiet = false;

  for (const char* name : {"validate", "solve", "sweep"}) {
    auto* sub = app.add_subcommand(name);
    sub->add_option("file", file, "scenario file (INI)")->required();
    sub->add_option("--out", out_dir, "output directory (default: $STFERMAT_OUT or .)");
    sub->add_option("--segments", segments, "grid segments N");
    sub->add_option("--seed", seed, "random seed");
    sub->add_flag("--quiet", quiet, "do not echo results to stdout");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : stfermat::kExitParse;
  }

  stfermat::RunContext ctx;
  ctx.quiet = quiet;
  const bool from_flag = !out_dir.empty();
  if (from_flag) ctx.out_dir = out_dir;
  else if (const char* env = std::getenv("STFERMAT_OUT"); env && *env) ctx.out_dir = env;

  const std::string command = app.get_subcommands().front()->get_name();
  return stfermat::run_command(command, file, ctx, segments, seed, from_flag);
}
