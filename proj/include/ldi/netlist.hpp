#pragma once

#include "ldi/ofet.hpp"
#include "ldi/stimulus.hpp"

#include <optional>
#include <string>
#include <vector>

namespace ldi {

using NodeId = int;
inline constexpr NodeId GROUND = 0;

// A source is either a fixed DC level or a pulse train.
struct Waveform {
    double dc = 0.0;
    std::optional<PulseTrain> pulse;

    double value_at(double t) const { return pulse ? pulse->value_at(t) : dc; }
    // Level with the stimulus inactive; DC operating points use this.
    double rest_value() const { return pulse ? pulse->level_low : dc; }
};

struct Transistor {
    std::string name;
    OfetParams params;
    HysteresisState hyst;  // initial trap state; the solver evolves a copy
    NodeId gate = GROUND, drain = GROUND, source = GROUND;
};

struct Capacitor {
    std::string name;
    double farads = 0.0;
    NodeId a = GROUND, b = GROUND;
};

struct VoltageSource {
    std::string name;
    Waveform wave;
    NodeId pos = GROUND, neg = GROUND;
};

// Reads a transistor's drain current, times `scale` (so a device whose
// conventional drain current is negative can be reported positive).
struct CurrentProbe {
    std::string label;
    std::string transistor;
    double scale = 1.0;
};

// Immutable after build; share freely between solver instances.
struct Netlist {
    std::vector<std::string> node_names;  // index 0 is ground
    std::vector<Transistor> transistors;
    std::vector<Capacitor> capacitors;
    std::vector<VoltageSource> sources;
    std::vector<CurrentProbe> probes;

    int node_count() const { return static_cast<int>(node_names.size()); }
    int find_node(const std::string& name) const;        // -1 if absent
    int transistor_index(const std::string& name) const; // -1 if absent
    const VoltageSource* find_source(const std::string& name) const;

    // Union of all source switching instants, sorted ascending, deduplicated.
    std::vector<double> breakpoints() const;
};

class NetlistBuilder {
public:
    NetlistBuilder();

    NodeId add_node(const std::string& name);  // idempotent per name
    NodeId node(const std::string& name) const; // throws if unknown

    void add_transistor(const std::string& name, const OfetParams& params,
                        NodeId gate, NodeId drain, NodeId source,
                        const HysteresisState& hyst = {});
    void add_capacitor(const std::string& name, double farads, NodeId a, NodeId b);
    void add_vsource(const std::string& name, const Waveform& wave,
                     NodeId pos, NodeId neg);
    void add_probe(const std::string& label, const std::string& transistor,
                   double scale = 1.0);

    // Validates connectivity and parameters; throws InvalidInput on problems.
    Netlist build() const;

private:
    Netlist n_;
    void check_node(NodeId id, const std::string& what) const;
    void check_fresh_name(const std::string& name) const;
};

} // namespace ldi
