#pragma once

// Command-line verbs: JSON config parsing with per-verb key whitelists,
// deterministic CSV/JSON outputs, and a run manifest.

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "anyonvlasov/common.hpp"

namespace anyv::cli {

inline constexpr const char* kCodeVersion = "0.1.0";

// Bad invocation or malformed configuration; mapped to exit code 2.
struct UsageError : Error {
  using Error::Error;
};

// Parameter sizes derived from the particle number: hbar = N^{-1/2},
// alpha = beta / N, smearing radius = N^{-radius_exponent}.
struct ScalingRegime {
  long particles = 1;
  double beta = 0.0;
  double radius_exponent = 0.125;

  void validate() const;
  double hbar() const;
  double alpha() const;
  double radius() const;
};

struct RunResult {
  int exit_code = 0;          // 0 success, 2 usage, 1 runtime failure
  std::string message;        // failure description, empty on success
  std::vector<std::string> outputs;  // files written, relative to out_dir
};

// Applies "key=value" overrides onto a configuration. Values parse as JSON
// scalars when possible (numbers, booleans) and fall back to strings.
nlohmann::json apply_overrides(nlohmann::json config, const std::vector<std::string>& overrides);

// Validates the verb's key whitelist, runs it, writes its outputs plus
// manifest.json into out_dir. Numeric outputs are deterministic for a fixed
// seed; the manifest is exempt (it records wall time).
RunResult run_verb(const std::string& verb, nlohmann::json config, std::uint64_t seed,
                   const std::string& out_dir);

const std::vector<std::string>& known_verbs();

}  // namespace anyv::cli
