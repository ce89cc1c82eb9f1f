#include <fstream>
#include <stdexcept>

#include "aesthetic/guidance/guidance.hpp"
#include "guidance_templates.inc"

namespace aesthetic::guidance {

namespace {

Trigger trigger_from_string(const std::string& s) {
  if (s == "score") return Trigger::score;
  if (s == "attended_area") return Trigger::attended_area;
  if (s == "chrominance") return Trigger::chrominance;
  throw std::invalid_argument("template catalog: unknown trigger '" + s + "'");
}

std::string required_text(const nlohmann::json& j, const std::string& key, const std::string& where) {
  if (!j.contains(key) || !j.at(key).is_string() || j.at(key).get<std::string>().empty()) {
    throw std::invalid_argument("template catalog: " + where + " needs a non-empty '" + key + "'");
  }
  return j.at(key).get<std::string>();
}

}  // namespace

const TemplateCatalog& TemplateCatalog::builtin() {
  static const TemplateCatalog catalog = from_json(nlohmann::json::parse(kBuiltinTemplates));
  return catalog;
}

TemplateCatalog TemplateCatalog::from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("attributes") || !j.contains("region")) {
    throw std::invalid_argument("template catalog needs 'attributes' and 'region' objects");
  }
  TemplateCatalog c;
  const auto& attrs = j.at("attributes");
  for (auto it = attrs.begin(); it != attrs.end(); ++it) {
    if (attribute_index(it.key()) == kNumAttributes) {
      throw std::invalid_argument("template catalog: unknown attribute '" + it.key() + "'");
    }
  }
  for (std::size_t i = 0; i < kNumAttributes; ++i) {
    const std::string name(kAttributeNames[i]);
    if (!attrs.contains(name)) throw std::invalid_argument("template catalog: missing attribute '" + name + "'");
    const auto& a = attrs.at(name);
    AttributeTemplates& t = c.attributes_[i];
    t.trigger = trigger_from_string(required_text(a, "trigger", name));
    t.low_text = required_text(a, "low_text", name);
    t.high_text = required_text(a, "high_text", name);
  }
  const auto& region = j.at("region");
  c.region_remove_ = required_text(region, "remove", "region");
  c.region_keep_ = required_text(region, "keep", "region");
  c.region_mixed_ = required_text(region, "mixed", "region");
  c.region_neutral_ = required_text(region, "neutral", "region");
  return c;
}

TemplateCatalog TemplateCatalog::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot read template catalog " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument("template catalog " + path.string() + ": " + e.what());
  }
  return from_json(j);
}

const std::string& TemplateCatalog::text(const std::string& id) const {
  if (id == "region.remove") return region_remove_;
  if (id == "region.keep") return region_keep_;
  if (id == "region.mixed") return region_mixed_;
  if (id == "region.neutral") return region_neutral_;
  const auto dot = id.rfind('.');
  if (dot != std::string::npos) {
    const std::size_t index = attribute_index(id.substr(0, dot));
    const std::string kind = id.substr(dot + 1);
    if (index < kNumAttributes && kind == "low") return attributes_[index].low_text;
    if (index < kNumAttributes && kind == "high") return attributes_[index].high_text;
  }
  throw std::out_of_range("unknown template id '" + id + "'");
}

std::vector<std::string> TemplateCatalog::ids() const {
  std::vector<std::string> out;
  for (auto name : kAttributeNames) {
    out.push_back(std::string(name) + ".low");
    out.push_back(std::string(name) + ".high");
  }
  for (const char* r : {"region.remove", "region.keep", "region.mixed", "region.neutral"}) out.emplace_back(r);
  return out;
}

}  // namespace aesthetic::guidance
