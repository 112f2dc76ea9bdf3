// SPDX-License-Identifier: Apache-2.0
#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <CLI11.hpp>
#include <ostream>

#include "fixv2w/cli.hpp"

namespace fixv2w::cli {
namespace {

// Exclusive advisory lock on <out>/.lock, held for the process lifetime.
class DirectoryLock {
 public:
  explicit DirectoryLock(const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    const auto path = (dir / ".lock").string();
    fd_ = ::open(path.c_str(), O_RDWR | O_CREAT | O_CLOEXEC, 0644);
    if (fd_ < 0) throw Error(ErrorClass::Config, "output_locked", "cannot open lock file " + path);
    if (::flock(fd_, LOCK_EX | LOCK_NB) != 0) {
      ::close(fd_);
      throw Error(ErrorClass::Config, "output_locked",
                  "output directory " + dir.string() + " is in use by another fixv2w process");
    }
  }
  ~DirectoryLock() {
    ::flock(fd_, LOCK_UN);
    ::close(fd_);
  }
  DirectoryLock(const DirectoryLock&) = delete;
  DirectoryLock& operator=(const DirectoryLock&) = delete;

 private:
  int fd_ = -1;
};

}  // namespace

int main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Remap invalid CVE-to-CWE mappings with knowledge-graph embeddings", "fixv2w"};
  app.require_subcommand(1, 1);
  app.fallthrough();

  std::string config_path, as_of, strategy, status, out_dir, from, to, cache_dir;
  std::optional<std::size_t> top_n, threads;
  std::optional<std::uint64_t> seed;
  std::vector<std::string> sets;
  bool fetch = false;
  app.add_option("--config", config_path, "JSON file of flat dotted keys")->check(CLI::ExistingFile);
  app.add_option("--as-of", as_of, "snapshot date (YYYY-MM-DD) for snapshot, train and fix");
  app.add_option("--strategy", strategy, "candidate strategy (cwe1003, top25, descendants, family, members, "
                                         "members-fnn, tailored)");
  app.add_option("--status", status, "old-CWE status to remap")->check(CLI::IsMember({"prohibited", "discouraged"}));
  app.add_option("--top-n", top_n, "predictions written back per fixed mapping")->check(CLI::Range(1, 3));
  app.add_option("--threads", threads, "worker threads")->check(CLI::PositiveNumber);
  app.add_option("--seed", seed, "random seed");
  app.add_option("--out", out_dir, "output directory");
  app.add_option("--from", from, "window start (YYYY-MM-DD)");
  app.add_option("--to", to, "window end (YYYY-MM-DD)");
  app.add_option("--set", sets, "override a config key, KEY=VALUE");
  app.add_option("--cache-dir", cache_dir, "NVD response cache for ingest --fetch");

  std::map<std::string, CLI::App*> subs;
  subs["ingest"] = app.add_subcommand("ingest", "read the inputs and report what they hold");
  subs["ingest"]->add_flag("--fetch", fetch, "page the NVD API into the cache first (key from "
                                             "FIXV2W_NVD_API_KEY)");
  subs["snapshot"] = app.add_subcommand("snapshot", "replay the history up to a date and save the graph");
  subs["longitudinal"] = app.add_subcommand("longitudinal", "remap statistics over a date window");
  subs["train"] = app.add_subcommand("train", "train embeddings on the training snapshot");
  subs["fix"] = app.add_subcommand("fix", "rank candidates for invalid mappings and write the fixes back");
  subs["evaluate"] = app.add_subcommand("evaluate", "score strategies against later NVD remaps");
  subs["retrain-eval"] = app.add_subcommand("retrain-eval", "open- and closed-world completion after fixing");
  subs["exploits"] = app.add_subcommand("exploits", "predictions for exploited CVEs");

  std::string command = "usage";
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << error_json(ConfigError(e.what()), command) << "\n";
    return 2;
  }
  for (const auto& [name, sub] : subs) {
    if (sub->parsed()) command = name;
  }

  try {
    RunConfig cfg;
    if (!config_path.empty()) cfg = load_config(config_path);
    if (!as_of.empty()) cfg.set("snapshot.as_of", "\"" + as_of + "\"");
    if (!strategy.empty()) cfg.set("fix.strategy", "\"" + strategy + "\"");
    if (!status.empty()) cfg.set("fix.status", "\"" + status + "\"");
    if (top_n) cfg.top_n = *top_n;
    if (threads) cfg.threads = *threads;
    if (seed) cfg.seed = *seed;
    if (!from.empty()) cfg.set("window.from", "\"" + from + "\"");
    if (!to.empty()) cfg.set("window.to", "\"" + to + "\"");
    if (!cache_dir.empty()) cfg.cache_dir = cache_dir;
    for (const auto& kv : sets) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) throw ConfigError("--set expects KEY=VALUE, got '" + kv + "'");
      cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
    }
    if (!out_dir.empty()) cfg.out = out_dir;
    cfg.validate();

    DirectoryLock lock(cfg.out);
    run(command, cfg, {.fetch = fetch});
    out << nlohmann::ordered_json{{"command", command},
                                  {"manifest", (cfg.out / ("manifest." + command + ".json")).string()},
                                  {"config_sha256", cfg.hash()}}
               .dump()
        << "\n";
    return 0;
  } catch (const Error& e) {
    err << error_json(e, command) << "\n";
    return exit_code(e.error_class());
  } catch (const std::filesystem::filesystem_error& e) {
    err << error_json(Error(ErrorClass::Data, "io_error", e.what()), command) << "\n";
    return 3;
  } catch (const std::exception& e) {
    err << error_json(InternalError(e.what()), command) << "\n";
    return 1;
  }
}

}  // namespace fixv2w::cli
