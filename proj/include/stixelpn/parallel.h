#pragma once

namespace stixelpn {

// Kernel execution mode. Results are bitwise identical between the two:
// parallel loops only ever split work across independent outputs, and every
// floating-point reduction runs in a fixed order that does not depend on the
// thread count.
enum class ExecMode { serial, openmp };

// Process-wide default used by the pipeline. Initialized from the
// STIXELPN_THREADS environment variable (0 or unset = OpenMP default).
ExecMode default_exec_mode();
void set_exec_mode(ExecMode mode);

int max_threads();
void set_threads(int n);  // n <= 0 restores the OpenMP default

// Reads STIXELPN_THREADS and applies it. Called by the CLI at startup;
// safe to call more than once.
void init_threads_from_env();

}  // namespace stixelpn
