#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "apc/block.hpp"

namespace apc {

// Position of a token inside the source text, 1-based.
struct SourceSpan {
    int line = 1;
    int column = 1;
    int length = 0;
    bool operator==(const SourceSpan&) const = default;
};

enum class Severity { error, warning };

struct Diagnostic {
    Severity severity = Severity::error;
    std::string code;  // E_SYNTAX, E_DUPLICATE_ID, E_UNKNOWN_ID, E_PARAM + validate codes
    std::string message;
    SourceSpan span;
};

// "line:col: error E_SYNTAX: ..." - the shape the CLI prints.
[[nodiscard]] std::string to_string(const Diagnostic& d);

struct ParseResult {
    std::optional<Patch> patch;           // engaged iff no error was emitted
    std::vector<Diagnostic> diagnostics;  // warnings may accompany a valid patch
    [[nodiscard]] bool ok() const { return patch.has_value(); }
};

// Parses .apc source. A successful result satisfies every Patch invariant
// (validate_patch runs as the final phase and its findings come back as
// error diagnostics located at the offending statement).
[[nodiscard]] ParseResult parse_patch(std::string_view text);

// Canonical form: header, params, inputs, blocks, wires, probes, end; one
// statement per line, fixed parameter key order, shortest round-trip
// decimals. parse(serialize(p)) reproduces p up to canonical ordering.
[[nodiscard]] std::string serialize_patch(const Patch& patch);

// Shortest decimal that parses back to exactly the same double.
[[nodiscard]] std::string format_number(double v);

} // namespace apc
