#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace autoformal::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitData = 3;
inline constexpr int kExitDiverged = 4;

/// Environment variable naming the default `--output-dir`.
inline constexpr const char* kOutputDirEnv = "AUTOFORMAL_OUTPUT_DIR";

/// Subcommands: tokenize, align, split, vocab, train, infer, evaluate, cover.
/// Failures print one line `error kind=<Kind> line=<n> column=<n> message=<text>`
/// to `err`. `args` excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

int run_main(int argc, char** argv);

}  // namespace autoformal::cli
