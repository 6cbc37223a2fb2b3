#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

namespace labourflow::stats {

enum class Method { pearson, spearman, kendall };
std::string_view to_string(Method m);

struct CorrelationResult {
    Method method = Method::pearson;
    double r = 0.0;
    double p_value = 1.0;
    std::size_t n = 0;
};

// Average ranks (ties share the mean of their rank range), 1-based.
std::vector<double> average_ranks(std::span<const double> values);

// Sample Pearson r; two-sided p from t = r*sqrt((n-2)/(1-r^2)) against
// Student-t with n-2 degrees of freedom.
CorrelationResult pearson(std::span<const double> x, std::span<const double> y);

// Pearson over average ranks.
CorrelationResult spearman(std::span<const double> x, std::span<const double> y);

// Tau-b with tie corrections; two-sided p from the tie-corrected normal
// approximation of the concordance statistic.
CorrelationResult kendall(std::span<const double> x, std::span<const double> y);

}  // namespace labourflow::stats
