#include "apc/block.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

namespace apc {

namespace {

constexpr std::string_view kKindNames[kBlockKindCount] = {
    "atten", "gain",  "summer", "integrator", "multiplier", "const", "osc",   "noise",
    "env",   "seq",   "cmp",    "lim",        "bbd",        "input", "output", "probe",
};

[[noreturn]] void throw_arity(BlockKind kind, std::size_t got, std::size_t want) {
    throw Error("E_ARITY", std::string(kind_name(kind)) + " expects " +
                               std::to_string(want) + " input(s), got " + std::to_string(got));
}

void require_arity(BlockKind kind, std::span<const Volt> inputs, std::size_t want) {
    if (inputs.size() != want) throw_arity(kind, inputs.size(), want);
}

bool finite(double v) { return std::isfinite(v); }

} // namespace

BlockKind kind_of(const BlockParams& params) {
    return static_cast<BlockKind>(params.index());
}

BlockParams default_params(BlockKind kind) {
    switch (kind) {
        case BlockKind::atten: return AttenParams{};
        case BlockKind::gain: return GainParams{};
        case BlockKind::summer: return SummerParams{};
        case BlockKind::integrator: return IntegratorParams{};
        case BlockKind::multiplier: return MultiplierParams{};
        case BlockKind::constant: return ConstParams{};
        case BlockKind::osc: return OscParams{};
        case BlockKind::noise: return NoiseParams{};
        case BlockKind::env: return EnvParams{};
        case BlockKind::seq: return SeqParams{};
        case BlockKind::cmp: return CmpParams{};
        case BlockKind::lim: return LimParams{};
        case BlockKind::bbd: return BbdParams{};
        case BlockKind::input: return InputParams{};
        case BlockKind::output: return OutputParams{};
        case BlockKind::probe: return ProbeParams{};
    }
    throw Error("E_PARAM", "unknown block kind");
}

std::string_view kind_name(BlockKind kind) {
    return kKindNames[static_cast<int>(kind)];
}

std::optional<BlockKind> kind_from_name(std::string_view name) {
    for (int i = 0; i < kBlockKindCount; ++i) {
        if (kKindNames[i] == name) return static_cast<BlockKind>(i);
    }
    return std::nullopt;
}

int input_port_count(BlockKind kind, const BlockParams& params) {
    switch (kind) {
        case BlockKind::summer: return static_cast<int>(std::get<SummerParams>(params).k.size());
        case BlockKind::integrator:
            return static_cast<int>(std::get<IntegratorParams>(params).k.size());
        case BlockKind::multiplier:
        case BlockKind::cmp: return 2;
        case BlockKind::constant:
        case BlockKind::noise:
        case BlockKind::seq:
        case BlockKind::input: return 0;
        default: return 1;  // atten, gain, osc (1V/oct), env (gate), lim, bbd, output, probe
    }
}

int output_port_count(BlockKind kind) {
    return (kind == BlockKind::output || kind == BlockKind::probe) ? 0 : 1;
}

bool breaks_cycles(BlockKind kind) {
    return kind == BlockKind::integrator || kind == BlockKind::bbd;
}

bool is_combinational(BlockKind kind) {
    switch (kind) {
        case BlockKind::atten:
        case BlockKind::gain:
        case BlockKind::summer:
        case BlockKind::multiplier:
        case BlockKind::cmp:
        case BlockKind::lim:
        case BlockKind::output:
        case BlockKind::probe: return true;
        default: return false;
    }
}

// -----------------------------------------------------------------------------
// Patch
// -----------------------------------------------------------------------------

int Patch::index_of(std::string_view id) const {
    for (std::size_t i = 0; i < blocks.size(); ++i) {
        if (blocks[i].id == id) return static_cast<int>(i);
    }
    return -1;
}

const Block* Patch::find(std::string_view id) const {
    int i = index_of(id);
    return i < 0 ? nullptr : &blocks[static_cast<std::size_t>(i)];
}

std::vector<ProbeBinding> Patch::probes() const {
    std::vector<ProbeBinding> out;
    for (const Block& b : blocks) {
        if (b.kind != BlockKind::probe) continue;
        for (const Wire& w : wires) {
            if (w.dst == b.id) {
                out.push_back({b.id, w.src, w.src_port});
                break;
            }
        }
    }
    return out;
}

// -----------------------------------------------------------------------------
// validate_patch
// -----------------------------------------------------------------------------

namespace {

void check_params(const Block& b, std::vector<PatchIssue>& issues) {
    auto bad = [&](const std::string& what) {
        issues.push_back({"E_PARAM", b.id + ": " + what, -1, b.id});
    };
    auto all_finite_nonneg = [&](const std::vector<double>& k) {
        return !k.empty() &&
               std::all_of(k.begin(), k.end(), [](double v) { return finite(v) && v >= 0.0; });
    };
    switch (b.kind) {
        case BlockKind::atten: {
            const auto& p = std::get<AttenParams>(b.params);
            if (!finite(p.a) || p.a < 0.0 || p.a > 1.0) bad("atten coefficient must be in [0, 1]");
            break;
        }
        case BlockKind::gain: {
            const auto& p = std::get<GainParams>(b.params);
            if (!finite(p.k) || p.k < 0.0) bad("gain magnitude must be non-negative");
            break;
        }
        case BlockKind::summer: {
            if (!all_finite_nonneg(std::get<SummerParams>(b.params).k))
                bad("summer needs >= 1 non-negative coefficient");
            break;
        }
        case BlockKind::integrator: {
            const auto& p = std::get<IntegratorParams>(b.params);
            if (!all_finite_nonneg(p.k)) bad("integrator needs >= 1 non-negative coefficient");
            if (!finite(p.ic)) bad("initial condition must be finite");
            break;
        }
        case BlockKind::multiplier: {
            const auto& p = std::get<MultiplierParams>(b.params);
            if (!finite(p.s) || p.s < 0.0) bad("multiplier scale must be non-negative");
            break;
        }
        case BlockKind::constant: {
            if (!finite(std::get<ConstParams>(b.params).v)) bad("const value must be finite");
            break;
        }
        case BlockKind::osc: {
            const auto& p = std::get<OscParams>(b.params);
            if (!finite(p.f_ref) || p.f_ref <= 0.0) bad("osc f_ref must be > 0");
            if (!finite(p.amp) || p.amp < 0.0) bad("osc amp must be non-negative");
            break;
        }
        case BlockKind::noise: {
            const auto& p = std::get<NoiseParams>(b.params);
            if (!finite(p.amp) || p.amp < 0.0) bad("noise amp must be non-negative");
            break;
        }
        case BlockKind::env: {
            const auto& p = std::get<EnvParams>(b.params);
            if (!finite(p.a) || p.a < 0.0 || !finite(p.d) || p.d < 0.0 || !finite(p.r) || p.r < 0.0)
                bad("env a, d, r must be >= 0");
            if (!finite(p.s) || p.s < 0.0 || p.s > 1.0) bad("env sustain must be in [0, 1]");
            break;
        }
        case BlockKind::seq: {
            const auto& p = std::get<SeqParams>(b.params);
            if (p.points.empty()) bad("seq needs >= 1 breakpoint");
            for (std::size_t i = 0; i < p.points.size(); ++i) {
                if (!finite(p.points[i].first) || !finite(p.points[i].second))
                    bad("seq breakpoints must be finite");
                if (i > 0 && p.points[i].first < p.points[i - 1].first)
                    bad("seq breakpoint times must be non-decreasing");
            }
            break;
        }
        case BlockKind::cmp: {
            const auto& p = std::get<CmpParams>(b.params);
            if (!finite(p.hi) || !finite(p.lo)) bad("cmp levels must be finite");
            break;
        }
        case BlockKind::lim: {
            const auto& p = std::get<LimParams>(b.params);
            if (!finite(p.lo) || !finite(p.hi) || p.lo > p.hi) bad("lim requires lo <= hi");
            break;
        }
        case BlockKind::bbd: {
            const auto& p = std::get<BbdParams>(b.params);
            if (p.stages < 1) bad("bbd needs >= 1 stage");
            if (!finite(p.f_clk) || p.f_clk <= 0.0) bad("bbd clock must be > 0");
            break;
        }
        case BlockKind::output: {
            const auto& p = std::get<OutputParams>(b.params);
            if (!finite(p.g) || p.g < 0.0) bad("output gain must be non-negative");
            break;
        }
        default: break;
    }
}

// Kahn over the combinational subgraph; whatever cannot be peeled belongs to
// a stateless cycle. One issue per strongly connected remnant.
void check_algebraic_loops(const Patch& patch,
                           const std::unordered_map<std::string_view, int>& index,
                           std::vector<PatchIssue>& issues) {
    const int n = static_cast<int>(patch.blocks.size());
    std::vector<std::vector<int>> next(static_cast<std::size_t>(n));
    std::vector<int> in_degree(static_cast<std::size_t>(n), 0);

    for (const Wire& w : patch.wires) {
        auto s = index.find(w.src);
        auto d = index.find(w.dst);
        if (s == index.end() || d == index.end()) continue;  // reported as E_PORT already
        // State decouples an output from the inputs that feed it, so wires out
        // of an integrator/bbd impose no instantaneous ordering.
        if (breaks_cycles(patch.blocks[static_cast<std::size_t>(s->second)].kind)) continue;
        next[static_cast<std::size_t>(s->second)].push_back(d->second);
        ++in_degree[static_cast<std::size_t>(d->second)];
    }

    std::vector<int> stack;
    for (int i = 0; i < n; ++i) {
        if (in_degree[static_cast<std::size_t>(i)] == 0) stack.push_back(i);
    }
    while (!stack.empty()) {
        int b = stack.back();
        stack.pop_back();
        for (int d : next[static_cast<std::size_t>(b)]) {
            if (--in_degree[static_cast<std::size_t>(d)] == 0) stack.push_back(d);
        }
    }

    std::vector<int> residue;
    for (int i = 0; i < n; ++i) {
        if (in_degree[static_cast<std::size_t>(i)] > 0) residue.push_back(i);
    }
    if (residue.empty()) return;

    // Group the residue into cycles by following edges inside it.
    std::vector<bool> in_residue(static_cast<std::size_t>(n), false);
    for (int i : residue) in_residue[static_cast<std::size_t>(i)] = true;
    std::vector<bool> reported(static_cast<std::size_t>(n), false);
    for (int start : residue) {
        if (reported[static_cast<std::size_t>(start)]) continue;
        std::string names;
        for (int i : residue) {
            if (reported[static_cast<std::size_t>(i)]) continue;
            reported[static_cast<std::size_t>(i)] = true;
            if (!names.empty()) names += " -> ";
            names += patch.blocks[static_cast<std::size_t>(i)].id;
        }
        issues.push_back({"E_ALGEBRAIC_LOOP",
                          "stateless feedback cycle (no integrator or bbd): " + names, -1,
                          patch.blocks[static_cast<std::size_t>(start)].id});
    }
}

} // namespace

std::vector<PatchIssue> validate_patch(const Patch& patch) {
    std::vector<PatchIssue> issues;

    std::unordered_map<std::string_view, int> index;
    for (std::size_t i = 0; i < patch.blocks.size(); ++i) {
        index.emplace(patch.blocks[i].id, static_cast<int>(i));
    }

    for (const Block& b : patch.blocks) {
        if (kind_of(b.params) != b.kind) {
            issues.push_back({"E_PARAM", b.id + ": parameter record does not match kind", -1, b.id});
            continue;
        }
        check_params(b, issues);
    }

    std::unordered_map<std::string, int> drivers;  // "dst#port" -> wire index
    for (std::size_t wi = 0; wi < patch.wires.size(); ++wi) {
        const Wire& w = patch.wires[wi];
        const int iw = static_cast<int>(wi);
        auto s = index.find(w.src);
        if (s == index.end()) {
            issues.push_back({"E_PORT", "wire source references unknown block '" + w.src + "'", iw, w.src});
        } else {
            const Block& b = patch.blocks[static_cast<std::size_t>(s->second)];
            if (w.src_port < 0 || w.src_port >= output_port_count(b.kind)) {
                issues.push_back({"E_PORT",
                                  w.src + ".out[" + std::to_string(w.src_port) + "]: no such output port",
                                  iw, w.src});
            }
        }
        auto d = index.find(w.dst);
        if (d == index.end()) {
            issues.push_back({"E_PORT", "wire target references unknown block '" + w.dst + "'", iw, w.dst});
            continue;
        }
        const Block& b = patch.blocks[static_cast<std::size_t>(d->second)];
        if (w.dst_port < 0 || w.dst_port >= input_port_count(b.kind, b.params)) {
            issues.push_back({"E_PORT",
                              w.dst + ".in[" + std::to_string(w.dst_port) + "]: no such input port on a " +
                                  std::string(kind_name(b.kind)),
                              iw, w.dst});
            continue;
        }
        std::string key = w.dst + "#" + std::to_string(w.dst_port);
        auto [it, fresh] = drivers.emplace(std::move(key), iw);
        if (!fresh) {
            issues.push_back({"E_DUP_DRIVER",
                              w.dst + ".in[" + std::to_string(w.dst_port) + "] already driven by wire " +
                                  std::to_string(it->second),
                              iw, w.dst});
        }
    }

    // Probe blocks must be bound to exactly one source.
    for (const Block& b : patch.blocks) {
        if (b.kind != BlockKind::probe) continue;
        bool bound = std::any_of(patch.wires.begin(), patch.wires.end(),
                                 [&](const Wire& w) { return w.dst == b.id; });
        if (!bound) issues.push_back({"E_PORT", "probe '" + b.id + "' has no source", -1, b.id});
    }

    check_algebraic_loops(patch, index, issues);
    return issues;
}

// -----------------------------------------------------------------------------
// Element semantics
// -----------------------------------------------------------------------------

double osc_wave(OscShape shape, double phase) {
    constexpr double two_pi = 6.283185307179586476925286766559;
    switch (shape) {
        case OscShape::sine: return std::sin(phase);
        default: break;
    }
    double p = phase / two_pi;
    p -= std::floor(p);  // wrap to [0, 1)
    switch (shape) {
        case OscShape::tri:
            if (p < 0.25) return 4.0 * p;
            if (p < 0.75) return 2.0 - 4.0 * p;
            return 4.0 * p - 4.0;
        case OscShape::saw: return 2.0 * p - 1.0;
        case OscShape::square: return p < 0.5 ? 1.0 : -1.0;
        default: return 0.0;
    }
}

double seq_value(const SeqParams& params, double t) {
    const auto& pts = params.points;
    if (pts.empty()) return 0.0;
    if (t <= pts.front().first) return pts.front().second;
    if (t >= pts.back().first) return pts.back().second;
    // First breakpoint strictly after t.
    std::size_t hi = 1;
    while (hi < pts.size() && pts[hi].first <= t) ++hi;
    const auto& a = pts[hi - 1];
    const auto& b = pts[hi];
    if (params.mode == SeqMode::step) return a.second;
    double span = b.first - a.first;
    if (span <= 0.0) return b.second;
    double u = (t - a.first) / span;
    return a.second + u * (b.second - a.second);
}

double integrator_rate(const IntegratorParams& params, std::span<const Volt> inputs) {
    if (inputs.size() != params.k.size())
        throw_arity(BlockKind::integrator, inputs.size(), params.k.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < inputs.size(); ++i) sum += params.k[i] * inputs[i];
    return -sum;
}

double vco_frequency(double f_ref, Volt v_ctrl, double nyquist) {
    double f = f_ref * std::exp2(v_ctrl);
    return std::min(f, nyquist);
}

Volt eval_block(BlockKind kind, const BlockParams& params, std::span<const Volt> inputs,
                const BlockState* state, double t, Volt rail) {
    const std::size_t want = static_cast<std::size_t>(input_port_count(kind, params));
    if (inputs.size() != want) throw_arity(kind, inputs.size(), want);

    double v = 0.0;
    switch (kind) {
        case BlockKind::atten: v = std::get<AttenParams>(params).a * inputs[0]; break;
        case BlockKind::gain: v = -std::get<GainParams>(params).k * inputs[0]; break;
        case BlockKind::summer: {
            const auto& k = std::get<SummerParams>(params).k;
            double sum = 0.0;
            for (std::size_t i = 0; i < inputs.size(); ++i) sum += k[i] * inputs[i];
            v = -sum;
            break;
        }
        case BlockKind::integrator:
            if (!state) throw Error("E_ARITY", "integrator evaluation requires state");
            v = state->value;
            break;
        case BlockKind::multiplier:
            v = std::get<MultiplierParams>(params).s * inputs[0] * inputs[1];
            break;
        case BlockKind::constant: v = std::get<ConstParams>(params).v; break;
        case BlockKind::osc: {
            if (!state) throw Error("E_ARITY", "osc evaluation requires state (phase)");
            const auto& p = std::get<OscParams>(params);
            v = p.amp * osc_wave(p.shape, state->value);
            break;
        }
        case BlockKind::noise:
            if (!state) throw Error("E_ARITY", "noise evaluation requires state (held sample)");
            v = state->value;
            break;
        case BlockKind::env:
            if (!state) throw Error("E_ARITY", "env evaluation requires state (level)");
            v = state->value;
            break;
        case BlockKind::seq: v = seq_value(std::get<SeqParams>(params), t); break;
        case BlockKind::cmp: {
            const auto& p = std::get<CmpParams>(params);
            v = inputs[0] > inputs[1] ? p.hi : p.lo;
            break;
        }
        case BlockKind::lim: {
            const auto& p = std::get<LimParams>(params);
            v = std::clamp(inputs[0], p.lo, p.hi);
            break;
        }
        case BlockKind::bbd:
            if (!state) throw Error("E_ARITY", "bbd evaluation requires state (line output)");
            v = state->value;
            break;
        case BlockKind::input:
            if (!state) throw Error("E_ARITY", "input evaluation requires state (signal value)");
            v = state->value;
            break;
        case BlockKind::output: v = std::get<OutputParams>(params).g * inputs[0]; break;
        case BlockKind::probe: v = inputs[0]; break;
    }
    return clamp_rail(v, rail);
}

} // namespace apc
