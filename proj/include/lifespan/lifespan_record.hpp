#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>

namespace lifespan {

enum class RecordSource { pde, ode };

std::string_view source_name(RecordSource source);

/// One lifespan measurement. T is present only when status is "BlewUp".
struct LifespanRecord {
    double epsilon = 0.0;
    std::optional<double> T;
    std::string status;
    RecordSource source = RecordSource::pde;
    int dim = 0;
    double p = 0.0;
    int refinement = 0;
    double dr = 0.0;
    double dt0 = 0.0;
    std::size_t steps = 0;
    std::string note;

    bool blew_up() const { return T.has_value(); }
};

}  // namespace lifespan
