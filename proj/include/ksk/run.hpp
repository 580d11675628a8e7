#ifndef KSK_RUN_HPP
#define KSK_RUN_HPP

#include "ksk/config.hpp"

namespace ksk {

// Dispatches on cfg.mode, writes diagnostics.csv, summary.json, the resolved
// config echo and optional snapshots under cfg.out_dir.
// Returns the process exit status: 0 success, 1 numerical failure (partial
// outputs are kept with a "failed" marker in summary.json), 2 config error.
int run_mode(const RunConfig& cfg);

} // namespace ksk

#endif
