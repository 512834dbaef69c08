#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "scopeloc/config.hpp"

namespace scopeloc {

/// Exit status of a gradient check whose error exceeds the tolerance.
inline constexpr int kExitGradcheckFailed = 2;

// Each command takes an unresolved RunConfig, writes its files under the
// resolved paths and reports progress on `log`. Contract violations throw.
int cmd_synth(const RunConfig& config, std::ostream& log);
int cmd_train(const RunConfig& config, std::ostream& log);
int cmd_predict(const RunConfig& config, std::ostream& log);
int cmd_eval(const RunConfig& config, std::ostream& log);
int cmd_gradcheck(const RunConfig& config, std::ostream& log);
int cmd_sweep_gamma(const RunConfig& config, std::ostream& log);

/// Corpus split from the manifest when it exists, otherwise a fresh stratified split.
CorpusSplit load_corpus_split(const RunConfig& resolved);
/// Documents of one split, or every document for "all".
std::vector<Document> select_split(const CorpusSplit& split, const std::string& name);

}  // namespace scopeloc
