#pragma once

#include <functional>
#include <string_view>

namespace uvm {

using DiagnosticSink = std::function<void(std::string_view)>;

// Warnings from the numerical core (degenerate advantages, capped payoffs,
// grid extrapolation, ...) go through a single process-wide sink. The default
// writes to stderr.
void set_diagnostic_sink(DiagnosticSink sink);
void diagnostic(std::string_view message);

}  // namespace uvm
