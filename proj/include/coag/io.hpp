#ifndef COAG_IO_HPP
#define COAG_IO_HPP

#include <cstdint>
#include <iosfwd>
#include <string>

#include <json.hpp>

#include "coag/kernels.hpp"
#include "coag/measures.hpp"
#include "coag/simulator.hpp"

namespace coag {

using nlohmann::json;

// Schema violations carry a path-qualified message and map to CLI exit code 2.
struct ConfigError : CoagError {
    using CoagError::CoagError;
};

// configurations <-> arrays of [site, mass, count]
json configuration_to_json(const Configuration& c);
Configuration configuration_from_json(const json& j, const std::string& path = "/");

// trajectories <-> {initial, jumps:[{t, a:[site,mass], b:[site,mass], z}], T}
json trajectory_to_json(const Trajectory& t);
Trajectory trajectory_from_json(const json& j, const std::string& path = "/");

json site_space_to_json(const SiteSpace& s);
SiteSpace site_space_from_json(const json& j, const std::string& path);

json kernel_to_json(const KernelSpec& k);
KernelSpec kernel_from_json(const json& j, const std::string& path);

json placement_to_json(const PlacementSpec& p);
PlacementSpec placement_from_json(const json& j, const std::string& path);

SimConfig sim_config_from_json(const json& j, const std::string& path = "");

// event logs stream to JSONL: a header line {atoms, T}, then one event per line
void event_log_to_jsonl(const EventLog& log, std::ostream& os);
EventLog event_log_from_jsonl(std::istream& is);

// field access with path-qualified errors
const json& require_field(const json& j, const std::string& key, const std::string& path);
double require_number(const json& j, const std::string& key, const std::string& path);
std::int64_t require_int(const json& j, const std::string& key, const std::string& path);

std::uint64_t fnv1a64(const std::string& data);
std::string format_double(double v);  // shortest-exact %.17g formatting

}  // namespace coag

#endif
