#pragma once

#include <fstream>
#include <sstream>
#include <string>

namespace paths {

inline std::string data(const std::string& name) { return std::string(CASPR_DATA_DIR) + "/" + name; }
inline std::string golden(const std::string& name) { return std::string(CASPR_TEST_DIR) + "/golden/" + name; }

inline std::string slurp(const std::string& path)
{
    std::ifstream in(path);
    std::stringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

} // namespace paths
