#include "uvm/diagnostics.hpp"

#include <iostream>
#include <mutex>
#include <string>
#include <utility>

namespace uvm {
namespace {

std::mutex sink_mutex;

DiagnosticSink& sink_slot() {
    static DiagnosticSink sink = [](std::string_view msg) {
        std::cerr << "[uvm] " << msg << '\n';
    };
    return sink;
}

}  // namespace

void set_diagnostic_sink(DiagnosticSink sink) {
    std::lock_guard lock(sink_mutex);
    sink_slot() = std::move(sink);
}

void diagnostic(std::string_view message) {
    std::lock_guard lock(sink_mutex);
    if (sink_slot()) sink_slot()(message);
}

}  // namespace uvm
