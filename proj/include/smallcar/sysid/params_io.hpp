#pragma once

// JSON form of the vehicle parameters. Field names mirror VehicleParams; a
// group that was not identified is written as null.
//
//   {"schema_version": 1,
//    "friction": {"a":..,"b":..,"c":..},
//    "motor": {"d":..,"e":..,"g":..},
//    "steering": {"a_t":..,"b_t":..,"c_t":..,"d_t":..,"e_t":..},
//    "tire": {"D":..,"C":..,"B":..,"E":..,"C_r":..},
//    "geometry": {"m":..,"l":..,"l_f":..,"l_r":..,"w":..,"I_z":..},
//    "delays": {"steer_delay":..,"long_delay":..}}

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "smallcar/models.hpp"

namespace smallcar::sysid {

inline constexpr int kParamsSchemaVersion = 1;

class ParamsFormatError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Possibly partial parameter set, e.g. the output of a pipeline run where
/// some stages had no data.
struct ParamsDocument {
  Geometry geometry;
  std::optional<FrictionParams> friction;
  std::optional<MotorParams> motor;
  std::optional<SteeringParams> steering;
  std::optional<TireParams> tire;
  std::optional<Delays> delays;

  ParamsDocument() = default;
  explicit ParamsDocument(const VehicleParams& p)
      : geometry(p.geometry), friction(p.friction), motor(p.motor), steering(p.steering), tire(p.tire),
        delays(p.delays) {}

  [[nodiscard]] std::vector<std::string> absent_groups() const {
    std::vector<std::string> out;
    if (!friction) out.emplace_back("friction");
    if (!motor) out.emplace_back("motor");
    if (!steering) out.emplace_back("steering");
    if (!tire) out.emplace_back("tire");
    if (!delays) out.emplace_back("delays");
    return out;
  }

  /// Complete parameter set; throws naming the missing groups. With
  /// `allow_missing_tire`, an absent tire group is left value-initialized.
  [[nodiscard]] VehicleParams to_vehicle_params(bool allow_missing_tire = false) const {
    std::string missing;
    for (const auto& name : absent_groups()) {
      if (name == "tire" && allow_missing_tire) continue;
      missing += (missing.empty() ? "" : ", ") + name;
    }
    if (!missing.empty()) throw ParamsFormatError("parameter groups absent: " + missing);
    return VehicleParams{*friction, *motor, *steering, tire.value_or(TireParams{}), geometry, *delays};
  }
};

inline nlohmann::ordered_json to_json(const ParamsDocument& d) {
  using J = nlohmann::ordered_json;
  J j;
  j["schema_version"] = kParamsSchemaVersion;
  j["friction"] = d.friction ? J{{"a", d.friction->a}, {"b", d.friction->b}, {"c", d.friction->c}} : J(nullptr);
  j["motor"] = d.motor ? J{{"d", d.motor->d}, {"e", d.motor->e}, {"g", d.motor->g}} : J(nullptr);
  j["steering"] = d.steering ? J{{"a_t", d.steering->a_t},
                                 {"b_t", d.steering->b_t},
                                 {"c_t", d.steering->c_t},
                                 {"d_t", d.steering->d_t},
                                 {"e_t", d.steering->e_t}}
                             : J(nullptr);
  j["tire"] = d.tire ? J{{"D", d.tire->D}, {"C", d.tire->C}, {"B", d.tire->B}, {"E", d.tire->E}, {"C_r", d.tire->C_r}}
                     : J(nullptr);
  j["geometry"] = J{{"m", d.geometry.m},     {"l", d.geometry.l}, {"l_f", d.geometry.l_f},
                    {"l_r", d.geometry.l_r}, {"w", d.geometry.w}, {"I_z", d.geometry.I_z}};
  j["delays"] = d.delays ? J{{"steer_delay", d.delays->steer_delay}, {"long_delay", d.delays->long_delay}}
                         : J(nullptr);
  return j;
}

inline nlohmann::ordered_json to_json(const VehicleParams& p) { return to_json(ParamsDocument(p)); }

namespace detail {

template <typename Json>
double field(const Json& group, const char* group_name, const char* key) {
  const auto it = group.find(key);
  if (it == group.end() || !it->is_number()) {
    throw ParamsFormatError(std::string(group_name) + "." + key + ": missing or not a number");
  }
  return it->template get<double>();
}

template <typename Json>
const Json* group(const Json& j, const char* name, bool required) {
  const auto it = j.find(name);
  if (it == j.end()) {
    if (required) throw ParamsFormatError(std::string(name) + ": missing group");
    return nullptr;
  }
  if (it->is_null()) {
    if (required) throw ParamsFormatError(std::string(name) + ": group is null");
    return nullptr;
  }
  if (!it->is_object()) throw ParamsFormatError(std::string(name) + ": must be an object");
  return &*it;
}

}  // namespace detail

template <typename Json>
ParamsDocument params_from_json(const Json& j) {
  if (!j.is_object()) throw ParamsFormatError("parameter document must be a JSON object");
  const auto version = j.find("schema_version");
  if (version == j.end() || !version->is_number_integer()) throw ParamsFormatError("schema_version: missing");
  if (version->template get<int>() != kParamsSchemaVersion) {
    throw ParamsFormatError("schema_version: unsupported version " + version->dump());
  }
  ParamsDocument d;
  const auto* geo = detail::group(j, "geometry", true);
  d.geometry = Geometry{detail::field(*geo, "geometry", "m"),   detail::field(*geo, "geometry", "l"),
                        detail::field(*geo, "geometry", "l_f"), detail::field(*geo, "geometry", "l_r"),
                        detail::field(*geo, "geometry", "w"),   detail::field(*geo, "geometry", "I_z")};
  if (const auto* f = detail::group(j, "friction", false)) {
    d.friction = FrictionParams{detail::field(*f, "friction", "a"), detail::field(*f, "friction", "b"),
                                detail::field(*f, "friction", "c")};
  }
  if (const auto* m = detail::group(j, "motor", false)) {
    d.motor = MotorParams{detail::field(*m, "motor", "d"), detail::field(*m, "motor", "e"),
                          detail::field(*m, "motor", "g")};
  }
  if (const auto* s = detail::group(j, "steering", false)) {
    d.steering = SteeringParams{detail::field(*s, "steering", "a_t"), detail::field(*s, "steering", "b_t"),
                                detail::field(*s, "steering", "c_t"), detail::field(*s, "steering", "d_t"),
                                detail::field(*s, "steering", "e_t")};
  }
  if (const auto* t = detail::group(j, "tire", false)) {
    d.tire = TireParams{detail::field(*t, "tire", "D"), detail::field(*t, "tire", "C"), detail::field(*t, "tire", "B"),
                        detail::field(*t, "tire", "E"), detail::field(*t, "tire", "C_r")};
  }
  if (const auto* dl = detail::group(j, "delays", false)) {
    d.delays = Delays{detail::field(*dl, "delays", "steer_delay"), detail::field(*dl, "delays", "long_delay")};
  }
  return d;
}

}  // namespace smallcar::sysid
