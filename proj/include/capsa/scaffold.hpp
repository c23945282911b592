#pragma once

#include <sstream>
#include <string>

#include "capsa/capsule.hpp"

namespace capsa {

namespace detail {

inline std::string flag_name(const std::string& param_name) {
  std::string flag = "--";
  for (char c : param_name) flag.push_back(c == '_' ? '-' : c);
  return flag;
}

inline std::string python_literal(const ojson& value) {
  if (value.is_string()) {
    std::string out = "\"";
    for (char c : value.get<std::string>()) {
      if (c == '"' || c == '\\') out.push_back('\\');
      out.push_back(c);
    }
    out.push_back('"');
    return out;
  }
  if (value.is_boolean()) return value.get<bool>() ? "True" : "False";
  return value.dump();
}

// A representative valid value for a parameter; used to build negative test
// cases that perturb exactly one argument.
inline std::string sample_argument(const ParameterSpec& param) {
  switch (param.kind) {
    case ParamKind::String: return "sample";
    case ParamKind::Integer: return "1";
    case ParamKind::Number: return "1.5";
    case ParamKind::Boolean: return "true";
    case ParamKind::Enum: return param.enum_values.empty() ? "sample" : param.enum_values.front();
    case ParamKind::Path: return "input.txt";
  }
  return "sample";
}

}  // namespace detail

inline std::string render_wrapper(const CapabilityContract& contract) {
  std::ostringstream out;
  out << "#!/usr/bin/env python3\n";
  out << "\"\"\"Command-line wrapper for " << contract.name << ".\n\n"
      << contract.description << "\n\"\"\"\n";
  out << "import argparse\n";
  out << "import json\n";
  out << "import sys\n\n";
  out << "import implementation\n\n\n";
  out << "def parse_bool(text):\n";
  out << "    if text.lower() in (\"true\", \"1\", \"yes\"):\n";
  out << "        return True\n";
  out << "    if text.lower() in (\"false\", \"0\", \"no\"):\n";
  out << "        return False\n";
  out << "    raise argparse.ArgumentTypeError(\"expected a boolean, got %r\" % text)\n\n\n";
  out << "def build_parser():\n";
  out << "    parser = argparse.ArgumentParser(\n";
  out << "        prog=\"" << contract.name << "\",\n";
  out << "        description=" << detail::python_literal(ojson(contract.description)) << ",\n";
  out << "    )\n";
  for (const auto& param : contract.parameters) {
    out << "    parser.add_argument(\n";
    out << "        \"" << detail::flag_name(param.name) << "\",\n";
    out << "        dest=\"" << param.name << "\",\n";
    switch (param.kind) {
      case ParamKind::Integer:
        out << "        type=int,\n";
        break;
      case ParamKind::Number:
        out << "        type=float,\n";
        break;
      case ParamKind::Boolean:
        out << "        type=parse_bool,\n";
        break;
      case ParamKind::Enum:
        out << "        choices=[";
        for (size_t i = 0; i < param.enum_values.size(); ++i) {
          if (i) out << ", ";
          out << detail::python_literal(ojson(param.enum_values[i]));
        }
        out << "],\n";
        break;
      case ParamKind::String:
      case ParamKind::Path:
        break;
    }
    bool required = param.required && !param.default_value;
    out << "        required=" << (required ? "True" : "False") << ",\n";
    if (param.default_value) {
      out << "        default=" << detail::python_literal(*param.default_value) << ",\n";
    }
    out << "        help=" << detail::python_literal(ojson(param.description)) << ",\n";
    out << "    )\n";
  }
  out << "    return parser\n\n\n";
  out << "def main(argv=None):\n";
  out << "    args = build_parser().parse_args(argv)\n";
  out << "    result = implementation.run(**vars(args))\n";
  out << "    json.dump(result, sys.stdout)\n";
  out << "    sys.stdout.write(\"\\n\")\n";
  out << "    return 0\n\n\n";
  out << "if __name__ == \"__main__\":\n";
  out << "    sys.exit(main())\n";
  return out.str();
}

inline std::string render_tool_card(const CapabilityContract& contract) {
  ojson card;
  card["name"] = contract.name;
  card["summary"] = truncate_word_boundary(contract.description, 200);
  card["parameters"] = ojson::array();
  for (const auto& param : contract.parameters) {
    ojson p;
    p["name"] = param.name;
    p["kind"] = to_string(param.kind);
    p["required"] = param.required;
    card["parameters"].push_back(p);
  }
  card["credential_aliases"] = ojson::array();
  for (const auto& cred : contract.credentials) card["credential_aliases"].push_back(cred.env_alias);
  card["runtime_class"] = to_string(contract.runtime_class);
  return card.dump(2) + "\n";
}

inline std::string render_tests_manifest(const CapabilityContract& contract) {
  ojson manifest;
  manifest["mock_network"] = contract.runtime_class == RuntimeClass::NetworkApi ||
                             contract.runtime_class == RuntimeClass::Hybrid;
  manifest["cases"] = ojson::array();

  // Full valid argument vector; each case below perturbs one parameter.
  auto valid_args = [&](const std::string& skip, const std::string& replace_name,
                        const std::string& replace_value) {
    ojson args = ojson::array();
    for (const auto& param : contract.parameters) {
      if (param.name == skip) continue;
      args.push_back(detail::flag_name(param.name));
      if (param.name == replace_name) {
        args.push_back(replace_value);
      } else {
        args.push_back(detail::sample_argument(param));
      }
    }
    return args;
  };

  for (const auto& param : contract.parameters) {
    if (param.required && !param.default_value) {
      ojson c;
      c["case_id"] = "missing_" + param.name;
      c["args"] = valid_args(param.name, "", "");
      c["expect_exit_nonzero"] = true;
      c["reason"] = "required parameter " + param.name + " omitted";
      manifest["cases"].push_back(c);
    }
    if (param.kind == ParamKind::Enum) {
      ojson c;
      c["case_id"] = "bad_enum_" + param.name;
      c["args"] = valid_args("", param.name, "__not_a_choice__");
      c["expect_exit_nonzero"] = true;
      c["reason"] = "value outside enum for " + param.name;
      manifest["cases"].push_back(c);
    }
    if (param.kind == ParamKind::Integer || param.kind == ParamKind::Number ||
        param.kind == ParamKind::Boolean) {
      ojson c;
      c["case_id"] = "bad_type_" + param.name;
      c["args"] = valid_args("", param.name, "not_a_" + to_string(param.kind));
      c["expect_exit_nonzero"] = true;
      c["reason"] = "type mismatch for " + param.name;
      manifest["cases"].push_back(c);
    }
  }
  return manifest.dump(2) + "\n";
}

inline std::string render_harness_manifest(const CapabilityContract& contract) {
  ojson manifest;
  manifest["command"] = ojson::array({"python3", "wrapper.py", "--help"});
  manifest["expected_exit"] = 0;
  manifest["timeout_ms"] = 60000;
  manifest["mock_network"] = contract.runtime_class == RuntimeClass::NetworkApi ||
                             contract.runtime_class == RuntimeClass::Hybrid;
  manifest["required_inputs"] = ojson::array();
  for (const auto& cred : contract.credentials) manifest["required_inputs"].push_back(cred.env_alias);
  return manifest.dump(2) + "\n";
}

inline std::string render_readme(const CapabilityContract& contract) {
  std::ostringstream out;
  out << "# " << contract.name << "\n\n";
  out << contract.description << "\n\n";
  out << "## Usage\n\n";
  out << "```\npython3 wrapper.py";
  for (const auto& param : contract.parameters) {
    if (param.required && !param.default_value) {
      out << " " << detail::flag_name(param.name) << " <" << to_string(param.kind) << ">";
    }
  }
  out << "\n```\n\n";
  out << "## Parameters\n\n";
  for (const auto& param : contract.parameters) {
    out << "- `" << detail::flag_name(param.name) << "` (" << to_string(param.kind)
        << (param.required ? ", required" : "") << "): " << param.description << "\n";
  }
  if (!contract.credentials.empty()) {
    out << "\n## Credentials\n\n";
    out << "Set these environment variables before running; values are never stored in the "
           "bundle.\n\n";
    for (const auto& cred : contract.credentials) {
      out << "- `" << cred.env_alias << "`: " << cred.description << "\n";
    }
  }
  out << "\n## Runtime class\n\n`" << to_string(contract.runtime_class) << "`\n";
  return out.str();
}

inline std::string render_requirements(const std::vector<DependencySpec>& deps) {
  std::ostringstream out;
  for (const auto& dep : deps) out << render_dependency(dep) << "\n";
  return out.str();
}

// Deterministic bundle generation: byte-identical output for identical input.
// Only credential aliases ever appear in the artifacts, never values.
inline BundleFiles scaffold_bundle(const CapabilityContract& contract,
                                   const std::string& core_implementation,
                                   const std::vector<std::string>& raw_requirements = {}) {
  auto findings = validate_contract(contract);
  if (has_error_findings(findings)) {
    throw Error(ErrorCode::INVALID_CONTRACT, "contract has error findings");
  }
  if (core_implementation.empty()) {
    throw Error(ErrorCode::INVALID_CONTRACT, "core implementation is empty");
  }

  auto deps = normalize_dependencies(raw_requirements, PinPolicy::RelaxPins);

  BundleFiles bundle;
  bundle.roles["wrapper"] = normalize_lf(render_wrapper(contract));
  bundle.roles["tests"] = normalize_lf(render_tests_manifest(contract));
  bundle.roles["harness_manifest"] = normalize_lf(render_harness_manifest(contract));
  bundle.roles["readme"] = normalize_lf(render_readme(contract));
  bundle.roles["tool_card"] = normalize_lf(render_tool_card(contract));
  bundle.roles["requirements"] = normalize_lf(render_requirements(deps));
  bundle.implementation = normalize_lf(core_implementation);
  return bundle;
}

}  // namespace capsa
