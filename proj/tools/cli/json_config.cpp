#include "cli/json_config.hpp"

#include <json.hpp>

namespace irrnn::cli {

namespace {

using nlohmann::json;

std::string scalar_text(const json& v) {
    if (v.is_string()) {
        return v.get<std::string>();
    }
    if (v.is_boolean()) {
        return v.get<bool>() ? "true" : "false";
    }
    if (v.is_number() || v.is_null()) {
        return v.dump();
    }
    throw CLI::ConversionError("config values must be scalars or arrays of scalars");
}

void collect(const json& obj, std::vector<std::string>& parents, std::vector<CLI::ConfigItem>& out) {
    for (const auto& [key, value] : obj.items()) {
        if (value.is_object()) {
            parents.push_back(key);
            collect(value, parents, out);
            parents.pop_back();
            continue;
        }
        CLI::ConfigItem item;
        item.parents = parents;
        item.name = key;
        if (value.is_array()) {
            for (const auto& e : value) {
                item.inputs.push_back(scalar_text(e));
            }
        } else {
            item.inputs.push_back(scalar_text(value));
        }
        out.push_back(std::move(item));
    }
}

json option_value(const CLI::Option* opt, bool default_also) {
    std::vector<std::string> values = opt->results();
    if (values.empty() && default_also) {
        const std::string d = opt->get_default_str();
        if (d.empty()) {
            return nullptr;
        }
        values.push_back(d);
    }
    if (values.empty()) {
        return nullptr;
    }
    if (opt->get_type_size() == 0) {  // flag
        return opt->as<bool>();
    }
    if (values.size() == 1 && opt->get_expected_max() <= 1) {
        return values.front();
    }
    return values;
}

json app_object(const CLI::App* app, bool default_also) {
    json obj = json::object();
    for (const CLI::Option* opt : app->get_options()) {
        if (opt->get_lnames().empty() || !opt->get_configurable()) {
            continue;
        }
        json v = option_value(opt, default_also);
        if (!v.is_null()) {
            obj[opt->get_lnames().front()] = std::move(v);
        }
    }
    for (const CLI::App* sub : app->get_subcommands({})) {
        if (sub->count_all() > 0 || sub->parsed()) {
            obj[sub->get_name()] = app_object(sub, default_also);
        }
    }
    return obj;
}

}  // namespace

std::string JsonConfig::to_config(const CLI::App* app, bool default_also, bool, std::string) const {
    return app_object(app, default_also).dump(2) + "\n";
}

std::vector<CLI::ConfigItem> JsonConfig::from_config(std::istream& input) const {
    json root;
    try {
        root = json::parse(input);
    } catch (const json::exception& e) {
        throw CLI::ConversionError(std::string("config is not valid JSON: ") + e.what());
    }
    if (!root.is_object()) {
        throw CLI::ConversionError("config must be a JSON object");
    }
    std::vector<CLI::ConfigItem> items;
    std::vector<std::string> parents;
    collect(root, parents, items);
    return items;
}

}  // namespace irrnn::cli
