#ifndef UKD_DATA_LOG_FILE_H_
#define UKD_DATA_LOG_FILE_H_

#include <iosfwd>
#include <string>

#include "ukd/data/dataset.h"

namespace ukd::data {

// Impression log, one record per line after a header:
//
//   sample_id,0:<card0>,1:<card1>,...,y_click,y_conv,y_pv_conv
//   17,0:5,1:33,...,1,0,0
//
// Header feature columns carry each field's cardinality; record feature
// columns carry "field:category" in field order. An unknown conversion label
// is written as "?".
void WriteLog(const Dataset& dataset, std::ostream& out);
void WriteLogFile(const Dataset& dataset, const std::string& path);

// Throws ParseError("<source>:<line>: ...") on malformed input and on label
// combinations that violate the click/conversion invariant.
Dataset ReadLog(std::istream& in, const std::string& source = "<stream>");
Dataset LoadLogFile(const std::string& path);

}  // namespace ukd::data

#endif  // UKD_DATA_LOG_FILE_H_
