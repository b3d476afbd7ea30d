#include "gridse/montecarlo.hpp"

#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <thread>

namespace gridse {

int physical_core_count() {
    std::ifstream in("/proc/cpuinfo");
    std::set<std::pair<int, int>> cores;
    int physical_id = -1;
    std::string line;
    while (std::getline(in, line)) {
        auto colon = line.find(':');
        if (colon == std::string::npos) continue;
        std::string key = line.substr(0, line.find('\t'));
        std::string value = line.substr(colon + 1);
        if (key.rfind("physical id", 0) == 0) {
            physical_id = std::stoi(value);
        } else if (key.rfind("core id", 0) == 0) {
            cores.emplace(physical_id, std::stoi(value));
        }
    }
    if (!cores.empty()) return static_cast<int>(cores.size());
    unsigned hc = std::thread::hardware_concurrency();
    return hc == 0 ? 1 : static_cast<int>(hc);
}

}  // namespace gridse
