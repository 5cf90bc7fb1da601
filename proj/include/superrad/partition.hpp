#ifndef SUPERRAD_PARTITION_HPP
#define SUPERRAD_PARTITION_HPP

#include <span>
#include <vector>

#include "superrad/params.hpp"

namespace superrad
{
// Two-photon occupation probabilities over the output modes k and k'.
// The conditioned pair is normalized over the event class {(2,0), (1,1)}.
struct PartitionProbabilities
{
    double p20 = 0.0;
    double p11 = 0.0;
    double p02 = 0.0;
    double conditioned_p20 = 0.0;
    double conditioned_p11 = 0.0;

    static PartitionProbabilities from_raw(double p20, double p11, double p02);
};

/// Indistinguishable photons: equal weight 1/3 on |2,0>, |1,1>, |0,2>.
PartitionProbabilities bose_einstein();

/// Distinguishable photons, each picking a mode with probability 1/2.
PartitionProbabilities maxwell_boltzmann();

/// exp(-(R/l_c)^2), the overlap of the two emitters' photons in the cavity mode.
double indistinguishability(double separation, double coherence_length);

/// eta * BE + (1 - eta) * MB in probability space; eta in [0, 1].
PartitionProbabilities mixed_partition(double eta);

struct PartitionCurvePoint
{
    double r_over_lc = 0.0;
    double eta = 0.0;
    double conditioned_p20 = 0.0;
    double conditioned_p11 = 0.0;
};

std::vector<PartitionCurvePoint> partition_curve(const CavityParams &cavity,
                                                 std::span<const double> separations);

} // namespace superrad

#endif // SUPERRAD_PARTITION_HPP
