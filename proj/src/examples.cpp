#include "bbci/examples.hpp"

namespace bbci::examples {

namespace {

QVec v(std::initializer_list<long> xs) { return to_qvec(std::vector<long>(xs)); }

}  // namespace

NefPartition running_nef()
{
    auto d1 = convex_hull({v({1, 0, 0}), v({1, 0, 1}), v({-1, 0, 1}), v({-1, 0, 0})});
    auto d2 = convex_hull({v({0, 1, 0}), v({0, 1, -1}), v({0, -1, -1}), v({0, -1, 0})});
    return validate_nef_partition({d1, d2});
}

HeightFunction running_height()
{
    HeightFunction h{{v({0, 0, 0})}, {0}};
    for (int i = 0; i < 3; ++i)
        for (int s : {1, -1}) {
            h.points.push_back(Q(s) * unit(3, i));
            h.values.push_back(1);
        }
    return h;
}

Fan hirzebruch_fan()
{
    std::vector<QVec> rays = {v({0, 1}), v({1, 1}), v({0, -1}), v({-1, 0})};
    return fan_from_maximal(2, rays, {{0, 1}, {1, 2}, {2, 3}, {3, 0}});
}

}  // namespace bbci::examples
