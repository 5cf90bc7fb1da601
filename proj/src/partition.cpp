#include "superrad/partition.hpp"

#include <cmath>

#include "superrad/errors.hpp"

namespace superrad
{
PartitionProbabilities PartitionProbabilities::from_raw(double p20, double p11, double p02)
{
    PartitionProbabilities p;
    p.p20 = p20;
    p.p11 = p11;
    p.p02 = p02;
    const double observed = p20 + p11;
    if (!(observed > 0.0))
        throw DomainError("partition has no weight on {(2,0), (1,1)}");
    p.conditioned_p20 = p20 / observed;
    p.conditioned_p11 = p11 / observed;
    return p;
}

PartitionProbabilities bose_einstein()
{
    return PartitionProbabilities::from_raw(1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0);
}

PartitionProbabilities maxwell_boltzmann()
{
    return PartitionProbabilities::from_raw(0.25, 0.5, 0.25);
}

double indistinguishability(double separation, double coherence_length)
{
    if (!(separation >= 0.0))
        throw DomainError("separation must be non-negative");
    if (!(coherence_length > 0.0))
        throw DomainError("coherence length must be positive");
    const double x = separation / coherence_length;
    return std::exp(-x * x);
}

PartitionProbabilities mixed_partition(double eta)
{
    if (!(eta >= 0.0 && eta <= 1.0))
        throw DomainError("indistinguishability must lie in [0, 1]");
    const auto be = bose_einstein();
    const auto mb = maxwell_boltzmann();
    return PartitionProbabilities::from_raw(eta * be.p20 + (1.0 - eta) * mb.p20,
                                            eta * be.p11 + (1.0 - eta) * mb.p11,
                                            eta * be.p02 + (1.0 - eta) * mb.p02);
}

std::vector<PartitionCurvePoint> partition_curve(const CavityParams &cavity,
                                                 std::span<const double> separations)
{
    if (separations.empty())
        throw DomainError("separation grid must be non-empty");
    const double lc = transverse_coherence_length(cavity);
    std::vector<PartitionCurvePoint> curve;
    curve.reserve(separations.size());
    for (double r : separations)
    {
        const double eta = indistinguishability(r, lc);
        const auto p = mixed_partition(eta);
        curve.push_back({r / lc, eta, p.conditioned_p20, p.conditioned_p11});
    }
    return curve;
}

} // namespace superrad
