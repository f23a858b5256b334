#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "guiagent/trace.hpp"

namespace guiagent {

// Maps one external trajectory encoding onto unified Steps.
class ExternalSchemaAdapter {
 public:
  virtual ~ExternalSchemaAdapter() = default;

  virtual std::string schema_id() const = 0;
  virtual Platform platform() const = 0;
  // Throws UnmappableAction or MissingScreenDims.
  virtual std::vector<Step> convert(const nlohmann::json& record) const = 0;
};

// "mobile_taps": tap/long_press/swipe/drag/type/press_* verbs with pixel
// coordinates. A swipe becomes a Scroll in the direction opposite to the
// finger motion, anchored at its start point.
const ExternalSchemaAdapter& mobile_taps_adapter();
// "web_elements": operations on element indices; clicks land on the box
// center and typing into an element expands to Click + Type.
const ExternalSchemaAdapter& web_elements_adapter();

std::vector<std::string> adapter_ids();
const ExternalSchemaAdapter& find_adapter(std::string_view schema_id);  // NotFound

std::vector<Step> convert_external(const nlohmann::json& record, const ExternalSchemaAdapter& adapter);

// Wraps converted steps into a stored-trace shape. Termination is finished or
// call_user when the last step says so, otherwise truncated.
Trace external_to_trace(const nlohmann::json& record, const ExternalSchemaAdapter& adapter);

}  // namespace guiagent
