#pragma once

#include <istream>
#include <stdexcept>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

namespace uncage::cli {

/// CLI11 config-file formatter for flat JSON objects keyed by long option
/// name, e.g. {"sigma-x": 2.0, "logits": true, "pck": [0.05, 0.1]}.
/// Values from the file fill only options not given on the command line,
/// so flags always win.
///
/// CLI11 reads the config on the root app only, so the formatter holds a
/// root pointer and scopes the flat keys to whichever subcommand the
/// command line selected.
class JsonConfig : public CLI::Config {
public:
  explicit JsonConfig(const CLI::App* root = nullptr) : root_(root) {}

  std::vector<CLI::ConfigItem> from_config(std::istream& input) const override {
    nlohmann::json root;
    try {
      root = nlohmann::json::parse(input);
    } catch (const nlohmann::json::parse_error& e) {
      throw std::invalid_argument(std::string("config file is not valid JSON: ") +
                                  e.what());
    }
    if (!root.is_object())
      throw std::invalid_argument("config file must be a JSON object");

    std::vector<std::string> parents;
    for (const CLI::App* app = root_; app != nullptr;) {
      const std::vector<CLI::App*> parsed = app->get_subcommands();
      if (parsed.empty()) break;
      parents.push_back(parsed.front()->get_name());
      app = parsed.front();
    }

    std::vector<CLI::ConfigItem> items;
    for (const auto& [key, value] : root.items()) {
      CLI::ConfigItem item;
      item.parents = parents;
      item.name = key;
      if (value.is_array()) {
        for (const auto& elem : value) item.inputs.push_back(scalar(elem, key));
      } else if (!value.is_null()) {
        item.inputs.push_back(scalar(value, key));
      }
      items.push_back(std::move(item));
    }
    return items;
  }

  std::string to_config(const CLI::App* app, bool default_also, bool,
                        std::string) const override {
    nlohmann::json root;
    for (const CLI::Option* opt : app->get_options()) {
      if (!opt->get_configurable() || opt->get_lnames().empty()) continue;
      const std::string& name = opt->get_lnames().front();
      if (opt->get_expected_min() == 0) {
        root[name] = opt->count() > 0;
      } else if (opt->count() > 0) {
        root[name] = from_strings(opt->results());
      } else if (default_also && !opt->get_default_str().empty()) {
        root[name] = parse_scalar(opt->get_default_str());
      }
    }
    return root.dump(2) + "\n";
  }

private:
  static std::string scalar(const nlohmann::json& value,
                            const std::string& key) {
    if (value.is_string()) return value.get<std::string>();
    if (value.is_boolean()) return value.get<bool>() ? "true" : "false";
    if (value.is_number()) return value.dump();
    throw std::invalid_argument("config key '" + key +
                                "' must be a scalar or array of scalars");
  }

  static nlohmann::json parse_scalar(const std::string& s) {
    const nlohmann::json parsed =
        nlohmann::json::parse(s, nullptr, /*allow_exceptions=*/false);
    if (!parsed.is_discarded() && (parsed.is_number() || parsed.is_boolean()))
      return parsed;
    return s;
  }

  static nlohmann::json from_strings(const std::vector<std::string>& values) {
    if (values.size() == 1) return parse_scalar(values.front());
    nlohmann::json arr = nlohmann::json::array();
    for (const std::string& v : values) arr.push_back(parse_scalar(v));
    return arr;
  }

  const CLI::App* root_;
};

} // namespace uncage::cli
