#include "gripsim/types.hpp"

namespace gripsim {

std::string_view to_string(ContactClass c) {
  switch (c) {
    case ContactClass::Slip: return "slip";
    case ContactClass::Contact: return "contact";
    case ContactClass::NoContact: return "no-contact";
  }
  return "unknown";
}

ContactClass parse_contact_class(std::string_view s) {
  if (s == "slip") return ContactClass::Slip;
  if (s == "contact") return ContactClass::Contact;
  if (s == "no-contact") return ContactClass::NoContact;
  fail(ErrorCode::Parse, "unknown contact class '" + std::string(s) + "'");
}

}  // namespace gripsim
