#include <string.h>
#include <stdlib.h>

/* Packet parsing helpers. */
struct packet {
  char payload[64];
  int len;
};

static void copy_payload(struct packet *pkt, const char *data, int len) {
  char scratch[32];
  int n = len;
  memcpy(scratch, data, n);
  memcpy(pkt->payload, scratch, sizeof(scratch));
  pkt->len = n;
}

int parse_packet(const char *wire, int size) {
  struct packet pkt;
  const char *body = wire + 4;
  int body_len = size - 4;
  copy_payload(&pkt, body, body_len);
  return pkt.len;
}

char *dup_header(const char *wire) {
  char *h = malloc(16);
  if (h == NULL) return NULL;
  strncpy(h, wire, 15);
  h[15] = '\0';
  return h;
}
