// Copyright 2026 The MSG Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#ifndef MSG_CLI_H_
#define MSG_CLI_H_

#include <iosfwd>
#include <string>
#include <vector>

#include "msg/config.h"
#include "msg/corpus.h"

namespace msg {

/// Entry point of the `msg` tool. Returns the process exit code; errors are
/// reported on `err` and never thrown.
int RunCli(const std::vector<std::string> &args, std::ostream &out, std::ostream &err);

/// Worker cap from MSG_NUM_THREADS (>= 1); 1 when unset. Throws ConfigError
/// for a malformed value.
int NumThreadsFromEnv();

/// Builds the training corpus described by the config: the synthetic corpus,
/// or audio listed in corpus.manifest.
std::vector<UtteranceRecord> BuildCorpus(const ExperimentConfig &config);

/// "<hash>-s<seed>" under `root`.
std::string RunDirectory(const std::string &root, const ExperimentConfig &config);

/// Parses "3,1,4" or "3 1 4".
std::vector<int> ParseIdList(const std::string &text);

/// A reference is either "<cache file>#<index>" or a wav path.
Matrix LoadReferenceMel(const std::string &spec);

}  // namespace msg

#endif  // MSG_CLI_H_
