#pragma once

#include <string>
#include <vector>

#include "rcnn/config.hpp"
#include "rcnn/training.hpp"

namespace rcnn::cli {

// Exit codes: 0 success, 1 usage error, 2 data/format error, 3 numeric
// failure.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitData = 2;
inline constexpr int kExitNumeric = 3;

// Effective run configuration: preset, then config-file lines, then --set
// overrides, each later source winning. Unknown keys are rejected.
struct RunSpec {
    ModelConfig model = ModelConfig::defaults(10);
    TrainConfig train;

    void apply(const std::string& key, const std::string& value);
    void apply_file(const std::string& path);
    void echo(std::ostream& out) const;
};

// Runs one subcommand; `args` excludes the program name. Errors are printed
// to the diagnostic stream and mapped to the exit codes above.
int dispatch(const std::vector<std::string>& args);

}  // namespace rcnn::cli
