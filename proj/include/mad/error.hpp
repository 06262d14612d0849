#pragma once

#include <stdexcept>
#include <string>

namespace mad {

// Every failure surfaced by the library is a mad::Error; the message names
// the offending input (file, line, model, image) where one exists.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace mad
