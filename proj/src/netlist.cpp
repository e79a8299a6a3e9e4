#include "ldi/netlist.hpp"
#include "ldi/errors.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace ldi {

int Netlist::find_node(const std::string& name) const {
    for (size_t i = 0; i < node_names.size(); ++i)
        if (node_names[i] == name) return static_cast<int>(i);
    return -1;
}

int Netlist::transistor_index(const std::string& name) const {
    for (size_t i = 0; i < transistors.size(); ++i)
        if (transistors[i].name == name) return static_cast<int>(i);
    return -1;
}

const VoltageSource* Netlist::find_source(const std::string& name) const {
    for (const auto& s : sources)
        if (s.name == name) return &s;
    return nullptr;
}

std::vector<double> Netlist::breakpoints() const {
    std::set<double> pts;
    for (const auto& s : sources) {
        if (!s.wave.pulse) continue;
        for (const Edge& e : s.wave.pulse->edges()) pts.insert(e.t);
    }
    return {pts.begin(), pts.end()};
}

NetlistBuilder::NetlistBuilder() { n_.node_names.push_back("gnd"); }

NodeId NetlistBuilder::add_node(const std::string& name) {
    int found = n_.find_node(name);
    if (found >= 0) return found;
    n_.node_names.push_back(name);
    return static_cast<NodeId>(n_.node_names.size() - 1);
}

NodeId NetlistBuilder::node(const std::string& name) const {
    int found = n_.find_node(name);
    if (found < 0) throw InvalidInput("unknown node: " + name);
    return found;
}

void NetlistBuilder::check_node(NodeId id, const std::string& what) const {
    if (id < 0 || id >= n_.node_count())
        throw InvalidInput(what + ": node id out of range");
}

void NetlistBuilder::check_fresh_name(const std::string& name) const {
    if (name.empty()) throw InvalidInput("element name must not be empty");
    for (const auto& t : n_.transistors)
        if (t.name == name) throw InvalidInput("duplicate element name: " + name);
    for (const auto& c : n_.capacitors)
        if (c.name == name) throw InvalidInput("duplicate element name: " + name);
    for (const auto& s : n_.sources)
        if (s.name == name) throw InvalidInput("duplicate element name: " + name);
}

void NetlistBuilder::add_transistor(const std::string& name, const OfetParams& params,
                                    NodeId gate, NodeId drain, NodeId source,
                                    const HysteresisState& hyst) {
    check_fresh_name(name);
    check_node(gate, name);
    check_node(drain, name);
    check_node(source, name);
    params.validate();
    n_.transistors.push_back({name, params, hyst, gate, drain, source});
}

void NetlistBuilder::add_capacitor(const std::string& name, double farads,
                                   NodeId a, NodeId b) {
    check_fresh_name(name);
    check_node(a, name);
    check_node(b, name);
    if (!(farads > 0.0)) throw InvalidInput(name + ": capacitance must be > 0");
    if (a == b) throw InvalidInput(name + ": capacitor shorted to itself");
    n_.capacitors.push_back({name, farads, a, b});
}

void NetlistBuilder::add_vsource(const std::string& name, const Waveform& wave,
                                 NodeId pos, NodeId neg) {
    check_fresh_name(name);
    check_node(pos, name);
    check_node(neg, name);
    if (pos == neg) throw InvalidInput(name + ": source shorted to itself");
    if (wave.pulse) wave.pulse->validate();
    if (!wave.pulse && !std::isfinite(wave.dc))
        throw InvalidInput(name + ": dc level must be finite");
    n_.sources.push_back({name, wave, pos, neg});
}

void NetlistBuilder::add_probe(const std::string& label, const std::string& transistor,
                               double scale) {
    if (label.empty()) throw InvalidInput("probe label must not be empty");
    for (const auto& p : n_.probes)
        if (p.label == label) throw InvalidInput("duplicate probe label: " + label);
    n_.probes.push_back({label, transistor, scale});
}

Netlist NetlistBuilder::build() const {
    // Every probe must point at a real transistor.
    for (const auto& p : n_.probes)
        if (n_.transistor_index(p.transistor) < 0)
            throw InvalidInput("probe " + p.label + ": unknown transistor " + p.transistor);

    // Every non-ground node needs at least one element terminal, or the MNA
    // matrix goes singular in an unhelpful way later.
    std::vector<int> touched(n_.node_names.size(), 0);
    touched[GROUND] = 1;
    for (const auto& t : n_.transistors)
        touched[t.gate] = touched[t.drain] = touched[t.source] = 1;
    for (const auto& c : n_.capacitors) touched[c.a] = touched[c.b] = 1;
    for (const auto& s : n_.sources) touched[s.pos] = touched[s.neg] = 1;
    for (size_t i = 0; i < touched.size(); ++i)
        if (!touched[i])
            throw InvalidInput("node " + n_.node_names[i] + " is not connected");

    return n_;
}

} // namespace ldi
