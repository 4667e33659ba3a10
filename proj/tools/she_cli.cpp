#include "she/she.h"

#include "CLI11.hpp"

#include <cstdio>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace {

struct Leaf {
  std::string command;
  CLI::App* app = nullptr;
  std::vector<std::pair<std::string, std::string>> values;  // key, flag value
  std::vector<CLI::Option*> opts;
};

struct ConfigDel {
  void operator()(she_config* c) const { she_config_free(c); }
};
struct ResultDel {
  void operator()(she_result* r) const { she_result_free(r); }
};
using ConfigPtr = std::unique_ptr<she_config, ConfigDel>;
using ResultPtr = std::unique_ptr<she_result, ResultDel>;

std::string flag_name(std::string key) {
  for (char& c : key)
    if (c == '_') c = '-';
  return key;
}

int exit_code(she_status s) { return s == SHE_ERR_NUMERICAL ? 2 : 1; }

int report(she_status s) {
  std::fprintf(stderr, "she: error: %s\n", she_last_error());
  return exit_code(s);
}

ConfigPtr new_config() {
  she_config* c = nullptr;
  she_config_new(&c);
  return ConfigPtr(c);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Singular stochastic heat equation toolkit"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(she_version()));

  std::string config_path, out_dir;
  std::optional<int> threads;
  app.add_option("--config", config_path, "key=value file; flags override it");
  app.add_option("--out", out_dir, "directory for CSV, field and resolved-config outputs");
  app.add_option("--threads", threads, "worker threads (default: SHE_THREADS, else all cores)")->check(CLI::NonNegativeNumber);

  std::vector<std::unique_ptr<Leaf>> leaves;
  std::map<std::string, CLI::App*> groups;
  for (std::size_t i = 0; i < she_command_count(); ++i) {
    const std::string name = she_command_name(i);
    const auto space = name.find(' ');
    CLI::App* parent = &app;
    std::string leaf_name = name;
    if (space != std::string::npos) {
      const std::string group = name.substr(0, space);
      leaf_name = name.substr(space + 1);
      auto it = groups.find(group);
      if (it == groups.end()) {
        CLI::App* g = app.add_subcommand(group, group + " commands");
        g->require_subcommand(1);
        g->fallthrough();
        it = groups.emplace(group, g).first;
      }
      parent = it->second;
    }
    auto leaf = std::make_unique<Leaf>();
    leaf->command = name;
    leaf->app = parent->add_subcommand(leaf_name, name);
    leaf->app->fallthrough();
    const std::size_t nk = she_command_key_count(name.c_str());
    leaf->values.resize(nk);
    for (std::size_t k = 0; k < nk; ++k) {
      const std::string key = she_command_key(name.c_str(), k);
      const std::string def = she_command_key_default(name.c_str(), k);
      std::string names = "--" + flag_name(key);
      if (flag_name(key) != key) names += ",--" + key;
      leaf->values[k].first = key;
      std::string help = she_command_key_help(name.c_str(), k);
      if (!def.empty()) help += " [" + def + "]";
      leaf->opts.push_back(leaf->app->add_option(names, leaf->values[k].second, help));
    }
    leaves.push_back(std::move(leaf));
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    std::fprintf(stderr, "%s", app.help().c_str());
    return 1;
  }

  Leaf* leaf = nullptr;
  for (auto& l : leaves)
    if (l->app->parsed()) leaf = l.get();
  if (!leaf) {
    std::fprintf(stderr, "%s", app.help().c_str());
    return 1;
  }

  ConfigPtr cfg = new_config();
  std::optional<int> file_threads;
  if (!config_path.empty()) {
    ConfigPtr file = new_config();
    if (she_status s = she_config_load(file.get(), config_path.c_str())) return report(s);
    for (std::size_t i = 0; i < she_config_size(file.get()); ++i) {
      const std::string k = she_config_key_at(file.get(), i);
      const std::string v = she_config_value_at(file.get(), i);
      if (k == "command") {
        if (v != leaf->command) {
          std::fprintf(stderr, "she: error: config file is for '%s', not '%s'\n", v.c_str(), leaf->command.c_str());
          return 1;
        }
      } else if (k == "format_version") {
        if (v != "1") {
          std::fprintf(stderr, "she: error: unsupported config format_version %s\n", v.c_str());
          return 1;
        }
      } else if (k == "threads") {
        try {
          file_threads = std::stoi(v);
        } catch (const std::exception&) {
          std::fprintf(stderr, "she: error: threads must be an integer\n");
          return 1;
        }
      } else if (she_status s = she_config_set(cfg.get(), k.c_str(), v.c_str())) {
        return report(s);
      }
    }
  }
  for (std::size_t k = 0; k < leaf->values.size(); ++k)
    if (leaf->opts[k]->count() > 0)
      if (she_status s = she_config_set(cfg.get(), leaf->values[k].first.c_str(), leaf->values[k].second.c_str()))
        return report(s);

  if (threads) she_set_threads(*threads);
  else if (file_threads) she_set_threads(*file_threads);

  she_result* raw = nullptr;
  if (she_status s = she_run(leaf->command.c_str(), cfg.get(), &raw)) return report(s);
  ResultPtr result(raw);

  if (she_result_table_count(result.get()) > 0)
    if (she_status s = she_table_write_csv(she_result_table(result.get(), 0), nullptr)) return report(s);

  if (out_dir.empty()) {
    if (she_result_field_count(result.get()) > 0)
      std::fprintf(stderr, "she: note: field outputs are written only with --out\n");
    return 0;
  }
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) {
    std::fprintf(stderr, "she: error: cannot create %s: %s\n", out_dir.c_str(), ec.message().c_str());
    return 1;
  }
  const std::filesystem::path dir(out_dir);
  for (std::size_t i = 0; i < she_result_table_count(result.get()); ++i) {
    const she_table* t = she_result_table(result.get(), i);
    const std::string path = (dir / (std::string(she_table_name(t)) + ".csv")).string();
    if (she_status s = she_table_write_csv(t, path.c_str())) return report(s);
  }
  for (std::size_t i = 0; i < she_result_field_count(result.get()); ++i) {
    const std::string path = (dir / (std::string(she_result_field_name(result.get(), i)) + ".shef")).string();
    if (she_status s = she_result_field_write(result.get(), i, path.c_str())) return report(s);
  }
  ConfigPtr resolved = new_config();
  she_config_set(resolved.get(), "command", leaf->command.c_str());
  she_config_set(resolved.get(), "format_version", "1");
  she_config_set(resolved.get(), "threads", std::to_string(she_threads()).c_str());
  for (std::size_t i = 0; i < she_config_size(cfg.get()); ++i)
    she_config_set(resolved.get(), she_config_key_at(cfg.get(), i), she_config_value_at(cfg.get(), i));
  if (she_status s = she_config_save(resolved.get(), (dir / "resolved-config").string().c_str())) return report(s);
  return 0;
}
