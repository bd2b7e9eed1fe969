#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "apc/error.hpp"

namespace apc {

// Machine volts; 1 unit == 1 V.
using Volt = double;

// Saturation bound of every signal in the machine.
inline constexpr Volt kDefaultRail = 10.0;

// Hard clip to the rails. NaN passes through so the engine can detect it
// (E_OVERFLOW) instead of silently masking a bug.
[[nodiscard]] constexpr Volt clamp_rail(Volt v, Volt rail = kDefaultRail) noexcept {
    if (v > rail) return rail;
    if (v < -rail) return -rail;
    return v;
}

// =============================================================================
// Element catalog
// =============================================================================
//
// The classic computing elements plus the synthesiser-style function
// generators. Gain, summer and integrator invert their output (the op amp is
// used on its inverting input); the attenuator is passive and never inverts.

enum class BlockKind {
    atten,       // a*v, 0 <= a <= 1, non-inverting
    gain,        // -k*v
    summer,      // -(k1*v1 + ... + kn*vn)
    integrator,  // -integral(k1*v1 + ... + kn*vn) + ic, stateful
    multiplier,  // s*va*vb
    constant,    // fixed voltage v       (DSL kind name: "const")
    osc,         // shaped oscillator with a 1V/oct control input
    noise,       // seeded uniform white noise in [-amp, amp]
    env,         // linear ADSR driven by a gate input
    seq,         // breakpoint function of time (step or linear)
    cmp,         // va > vb ? hi : lo
    lim,         // clamp(v, lo, hi)
    bbd,         // bucket-brigade delay: N stages clocked at f_clk, stateful
    input,       // named external signal
    output,      // audio sink with pre-amp gain g
    probe,       // trace sink
};

inline constexpr int kBlockKindCount = 16;

enum class OscShape { sine, tri, saw, square };
enum class SeqMode { step, linear };

// Kind-specific coefficient records. Coefficient magnitudes are stored
// non-negative; inversion is carried by the block semantics, and a negative
// gain is expressed by chaining a unit inverter.

struct AttenParams {
    double a = 1.0;
    bool operator==(const AttenParams&) const = default;
};

struct GainParams {
    double k = 1.0;
    bool operator==(const GainParams&) const = default;
};

struct SummerParams {
    std::vector<double> k{1.0};
    bool operator==(const SummerParams&) const = default;
};

struct IntegratorParams {
    std::vector<double> k{1.0};
    double ic = 0.0;  // output at t = 0
    bool operator==(const IntegratorParams&) const = default;
};

struct MultiplierParams {
    double s = 0.1;  // output = s*va*vb; 0.1 matches +-10 V normalization
    bool operator==(const MultiplierParams&) const = default;
};

struct ConstParams {
    double v = 0.0;
    bool operator==(const ConstParams&) const = default;
};

struct OscParams {
    OscShape shape = OscShape::sine;
    double f_ref = 440.0;  // Hz at 0 V control
    double amp = 1.0;      // volts
    bool operator==(const OscParams&) const = default;
};

struct NoiseParams {
    std::uint64_t seed = 0;
    double amp = 1.0;
    bool operator==(const NoiseParams&) const = default;
};

struct EnvParams {
    double a = 0.01;  // attack seconds
    double d = 0.1;   // decay seconds
    double s = 0.7;   // sustain level, 0..1
    double r = 0.3;   // release seconds
    bool operator==(const EnvParams&) const = default;
};

struct SeqParams {
    std::vector<std::pair<double, double>> points;  // (time, value), times non-decreasing
    SeqMode mode = SeqMode::step;
    bool operator==(const SeqParams&) const = default;
};

struct CmpParams {
    double hi = 5.0;
    double lo = 0.0;
    bool operator==(const CmpParams&) const = default;
};

struct LimParams {
    double lo = -kDefaultRail;
    double hi = kDefaultRail;
    bool operator==(const LimParams&) const = default;
};

struct BbdParams {
    int stages = 1;         // N >= 1; total delay N/(2*f_clk)
    double f_clk = 48000.0;
    bool operator==(const BbdParams&) const = default;
};

struct InputParams {
    bool operator==(const InputParams&) const = default;
};

struct OutputParams {
    double g = 1.0;  // pre-amp gain
    bool operator==(const OutputParams&) const = default;
};

struct ProbeParams {
    bool operator==(const ProbeParams&) const = default;
};

// Variant order matches BlockKind so kind_of(params) is a plain index lookup.
using BlockParams = std::variant<AttenParams, GainParams, SummerParams, IntegratorParams,
                                 MultiplierParams, ConstParams, OscParams, NoiseParams,
                                 EnvParams, SeqParams, CmpParams, LimParams, BbdParams,
                                 InputParams, OutputParams, ProbeParams>;

[[nodiscard]] BlockKind kind_of(const BlockParams& params);
[[nodiscard]] BlockParams default_params(BlockKind kind);

[[nodiscard]] std::string_view kind_name(BlockKind kind);
[[nodiscard]] std::optional<BlockKind> kind_from_name(std::string_view name);

// Port signature. Output arity is 1 except the sinks (output, probe).
// Input arity follows the coefficient count for summer/integrator.
[[nodiscard]] int input_port_count(BlockKind kind, const BlockParams& params);
[[nodiscard]] int output_port_count(BlockKind kind);

// Integrator and bbd hold state that breaks feedback cycles; every cycle in a
// patch must pass through one of them.
[[nodiscard]] bool breaks_cycles(BlockKind kind);

// Blocks whose output at an instant is a pure function of their inputs at
// that instant. Everything else is an evaluation root for the scheduler.
[[nodiscard]] bool is_combinational(BlockKind kind);

// =============================================================================
// Patch graph
// =============================================================================

struct Block {
    std::string id;
    BlockKind kind;
    BlockParams params;
    bool operator==(const Block&) const = default;
};

struct Wire {
    std::string src;
    int src_port = 0;
    std::string dst;
    int dst_port = 0;
    bool operator==(const Wire&) const = default;
};

// Derived view of one probe binding: trace name -> source block/port.
struct ProbeBinding {
    std::string name;
    std::string src;
    int src_port = 0;
    bool operator==(const ProbeBinding&) const = default;
};

// An analogue program: blocks wired together. Probes are blocks of kind
// probe; their single driving wire defines the binding. Immutable after
// construction (shareable across concurrent simulations).
struct Patch {
    std::string name;
    std::vector<std::pair<std::string, double>> params;  // named constants, declaration order
    std::vector<Block> blocks;                           // declaration order
    std::vector<Wire> wires;
    std::vector<std::string> inputs;  // names of the kind-input blocks, declaration order

    [[nodiscard]] int index_of(std::string_view id) const;  // -1 when absent
    [[nodiscard]] const Block* find(std::string_view id) const;
    [[nodiscard]] std::vector<ProbeBinding> probes() const;

    bool operator==(const Patch&) const = default;
};

// One invariant violation found by validate_patch.
struct PatchIssue {
    std::string code;     // E_PORT, E_DUP_DRIVER, E_ALGEBRAIC_LOOP, E_PARAM
    std::string message;
    int wire = -1;        // offending wire index, when the issue is wire-shaped
    std::string block;    // offending block id, when block-shaped
};

// Returns every invariant violation; empty result means the patch can be
// compiled for simulation.
[[nodiscard]] std::vector<PatchIssue> validate_patch(const Patch& patch);

// =============================================================================
// Element semantics
// =============================================================================

// Dynamic state for the stateful kinds, owned by a simulation:
// integrator level, osc phase (radians), env level, held noise/bbd sample.
struct BlockState {
    double value = 0.0;
};

// Instantaneous output of one element, rail-clamped. `state` must be present
// for kinds that carry state; `t` is the current time in seconds (used by
// seq). Throws Error(E_ARITY) when the input count mismatches the signature.
[[nodiscard]] Volt eval_block(BlockKind kind, const BlockParams& params,
                              std::span<const Volt> inputs, const BlockState* state,
                              double t, Volt rail = kDefaultRail);

// dV/dt of an integrator: -(k1*v1 + ... + kn*vn). Throws Error(E_ARITY).
[[nodiscard]] double integrator_rate(const IntegratorParams& params,
                                     std::span<const Volt> inputs);

// 1V/oct exponential pitch control: f_ref * 2^v_ctrl, clamped to
// (0, nyquist].
[[nodiscard]] double vco_frequency(double f_ref, Volt v_ctrl, double nyquist);

// Waveform value at a given phase (radians), amplitude 1.
[[nodiscard]] double osc_wave(OscShape shape, double phase);

// Breakpoint function value at time t (pure; clamps outside the table).
[[nodiscard]] double seq_value(const SeqParams& params, double t);

} // namespace apc
