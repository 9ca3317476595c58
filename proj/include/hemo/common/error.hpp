#pragma once

#include <stdexcept>
#include <string>

namespace hemo {

// Domain error carrying the owning module and a short machine-readable code.
// The CLI prints these as "ERROR:<module>:<code> <detail>" and exits 1.
class Error : public std::runtime_error {
public:
    Error(std::string module, std::string code, const std::string& detail)
        : std::runtime_error("ERROR:" + module + ":" + code + " " + detail),
          module_(std::move(module)),
          code_(std::move(code)) {}

    const std::string& module() const noexcept { return module_; }
    const std::string& code() const noexcept { return code_; }

private:
    std::string module_;
    std::string code_;
};

} // namespace hemo
