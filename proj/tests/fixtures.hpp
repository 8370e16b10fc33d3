#pragma once

#include "scnp/graph.hpp"

namespace fixtures {

// Two triangles joined by a single bridge edge: 0-1-2 and 3-4-5, bridge 2-3.
inline scnp::Graph two_triangles_bridge() {
    return scnp::Graph(6, {{0, 1, 1.0},
                           {0, 2, 1.0},
                           {1, 2, 1.0},
                           {2, 3, 1.0},
                           {3, 4, 1.0},
                           {3, 5, 1.0},
                           {4, 5, 1.0}});
}

inline scnp::Graph path3() {
    return scnp::Graph(3, {{0, 1, 1.0}, {1, 2, 1.0}});
}

inline scnp::Graph cycle4() {
    return scnp::Graph(4, {{0, 1, 1.0}, {0, 3, 1.0}, {1, 2, 1.0}, {2, 3, 1.0}});
}

}  // namespace fixtures
