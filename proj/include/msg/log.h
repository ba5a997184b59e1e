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

#ifndef MSG_LOG_H_
#define MSG_LOG_H_

#include <iostream>
#include <sstream>

namespace msg {

enum class LogLevel { kError = 0, kWarning = 1, kInfo = 2 };

/// Messages above this level are dropped. Defaults to kWarning.
LogLevel &GlobalLogLevel();

class LogMessage {
 public:
  LogMessage(LogLevel level, const char *tag) : level_(level) { os_ << tag << ": "; }
  ~LogMessage() {
    if (level_ <= GlobalLogLevel()) std::cerr << os_.str() << std::endl;
  }
  std::ostream &stream() { return os_; }

 private:
  LogLevel level_;
  std::ostringstream os_;
};

}  // namespace msg

#define MSG_WARN ::msg::LogMessage(::msg::LogLevel::kWarning, "WARNING").stream()
#define MSG_INFO ::msg::LogMessage(::msg::LogLevel::kInfo, "INFO").stream()

#endif  // MSG_LOG_H_
