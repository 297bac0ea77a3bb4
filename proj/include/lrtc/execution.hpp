#pragma once

namespace lrtc {

/// Selects between the OpenMP kernels and their serial reference path.
/// Both paths produce bit-identical results; the serial one exists so tests
/// and benchmarks have something to compare against.
enum class Execution { serial, parallel };

inline bool is_parallel(Execution e) { return e == Execution::parallel; }

}  // namespace lrtc
