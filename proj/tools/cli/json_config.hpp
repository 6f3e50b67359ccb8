#pragma once

#include <CLI11.hpp>

#include <istream>
#include <string>
#include <vector>

namespace irrnn::cli {

/// CLI11 config reader for JSON files shaped like
///   {"simulate": {"dims": [16, 16, 8], "seed": 7}, "fit": {"layers": 2}}
/// Top-level scalars address options of the main app; nested objects address
/// the subcommand of the same name. Command-line flags take precedence.
class JsonConfig : public CLI::Config {
  public:
    std::string to_config(const CLI::App* app, bool default_also, bool write_description,
                          std::string prefix) const override;
    std::vector<CLI::ConfigItem> from_config(std::istream& input) const override;
};

}  // namespace irrnn::cli
