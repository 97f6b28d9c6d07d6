#pragma once

#include <functional>

namespace root {

/// Reports completed fraction in [0, 1]. Long-running operations call it at
/// their checkpoints; a job runner may throw Error(Cancelled) from it to stop
/// the operation cooperatively.
using ProgressFn = std::function<void(double)>;

inline void reportProgress(const ProgressFn& progress, double fraction) {
  if (progress) progress(fraction);
}

}  // namespace root
