#include <gtest/gtest.h>

#include <sstream>

#include "serpaudit/panel.hpp"

using namespace serpaudit;

namespace {

Population two_user_population() {
    Population pop;
    pop.cities.push_back({"demtown", 30.0, CityCategory::democrat, -5});
    pop.cities.push_back({"gopville", 70.0, CityCategory::republican, -6});
    UserProfile a;
    a.user_id = "u1";
    a.fingerprint_id = "fp1";
    a.ideology = Ideology::democrat;
    a.city = "demtown";
    a.browser_language = "en-US";
    a.favorite_popular_domains = {"pop1.com", "pop2.com"};
    a.favorite_partisan_domains = {"fav1.org", "fav2.org"};
    UserProfile b;
    b.user_id = "u2";
    b.fingerprint_id = "fp2";
    b.ideology = Ideology::nonpartisan;
    b.city = "gopville";
    b.browser_language = "en-US";
    b.favorite_popular_domains = {"pop1.com"};
    pop.users = {a, b};
    return pop;
}

SerpRecord rec(const std::string& user, const std::string& ts, const std::string& query,
               std::vector<std::string> organic) {
    SerpRecord r;
    r.user_id = user;
    r.ts = parse_timestamp(ts);
    r.query = query;
    r.organic = std::move(organic);
    r.lang = "en-US";
    return r;
}

VisitEvent visit(const std::string& ts, const std::string& user, const std::string& domain) {
    return {parse_timestamp(ts), user, VisitEvent::Kind::visit, domain};
}
VisitEvent search(const std::string& ts, const std::string& user, const std::string& term) {
    return {parse_timestamp(ts), user, VisitEvent::Kind::search, term};
}

IdeologyTable simple_table() {
    IdeologyTable t(MergePolicy::zero_fill);
    t.set_single("fav1.org", -50.0);
    t.set_single("new1.com", 80.0);
    t.set_single("new2.com", -20.0);
    t.set_single("loc1.com", 60.0);
    return t;
}

}  // namespace

TEST(Panel, CountsAndPriorActivity) {
    const auto pop = two_user_population();
    const auto table = simple_table();
    const std::map<std::string, LocalLabel> localness{
        {"loc1.com", LocalLabel::local}, {"new1.com", LocalLabel::non_local}, {"new2.com", LocalLabel::non_local},
        {"fav1.org", LocalLabel::non_local}, {"pop1.com", LocalLabel::non_local}};

    // fav1.org occurs in the results; fav2.org never does
    const std::vector<SerpRecord> records{
        rec("u1", "2020-11-03T15:00:00Z", "q", {"fav1.org", "new1.com", "loc1.com", "new2.com"}),
        rec("u1", "2020-11-04T15:00:00Z", "q", {"new1.com", "pop1.com", "fav1.org", "new2.com"}),
        rec("u2", "2020-11-03T15:10:00Z", "q", {"new1.com", "new2.com", "loc1.com", "other.com"}),
    };
    const std::vector<VisitEvent> log{
        visit("2020-11-02T10:00:00Z", "u1", "fav2.org"),   // never occurs -> no prior_visits credit
        visit("2020-11-02T10:05:00Z", "u1", "fav2.org"),
        visit("2020-11-02T10:10:00Z", "u1", "fav1.org"),   // counts from Nov 3 on
        visit("2020-11-03T15:00:00Z", "u1", "fav1.org"),   // exactly at record ts: not strictly before
        search("2020-11-03T20:00:00Z", "u1", "fav1.org"),  // favorite used as a search term
        search("2020-11-03T20:05:00Z", "u1", "some query"),
        visit("2020-11-03T20:10:00Z", "u1", "nonfav.com"),
    };

    const auto rows = build_panel(records, pop, table, localness, log, Persistence(0.9));
    ASSERT_EQ(rows.size(), 3u);

    const auto& first = rows[0];
    EXPECT_EQ(first.user_id, "u1");
    EXPECT_EQ(first.n_familiar, 1);
    EXPECT_EQ(first.top_familiar_rank, 1);
    EXPECT_EQ(first.prior_visits, 1);   // fav2.org visits filtered out; same-instant visit excluded
    EXPECT_EQ(first.prior_searches, 0);
    EXPECT_EQ(first.user_dem, 1);
    EXPECT_EQ(first.user_rep, 0);
    EXPECT_EQ(first.city_dem, 1);
    EXPECT_EQ(first.city_rep, 0);
    EXPECT_DOUBLE_EQ(first.city_rep_share, 30.0);
    // visits to favorites before the record: fav2.org (x2, pi 0) and fav1.org (pi -50)
    EXPECT_NEAR(first.visited_sites_ideology, (0.0 + 0.0 - 50.0) / 3.0, 1e-12);

    const auto& second = rows[1];
    EXPECT_EQ(second.prior_visits, 2);   // the Nov 3 15:00 visit now counts
    EXPECT_EQ(second.prior_searches, 1); // fav1.org searched once before Nov 4
    EXPECT_EQ(second.n_familiar, 2);     // pop1.com and fav1.org on page
    EXPECT_EQ(second.top_familiar_rank, 2);

    const auto& third = rows[2];
    EXPECT_EQ(third.user_id, "u2");
    EXPECT_EQ(third.prior_visits, 0);  // zero history
    EXPECT_EQ(third.n_familiar, 0);
    EXPECT_FALSE(third.top_familiar_rank.has_value());
    EXPECT_DOUBLE_EQ(third.visited_sites_ideology, 0.0);

    // SRIS columns: first row, favorites of u1 = {pop1,pop2,fav1,fav2}
    const std::vector<std::string> page{"fav1.org", "new1.com", "loc1.com", "new2.com"};
    EXPECT_NEAR(*first.sris_all, sris(page, table, Persistence(0.9)), 1e-12);
    EXPECT_NEAR(*first.sris_new,
                sris(std::vector<std::string>{"new1.com", "loc1.com", "new2.com"}, table, Persistence(0.9)), 1e-12);
    EXPECT_DOUBLE_EQ(*first.sris_new_local, 60.0);
    EXPECT_NEAR(*first.sris_new_nonlocal,
                sris(std::vector<std::string>{"new1.com", "new2.com"}, table, Persistence(0.9)), 1e-12);
}

TEST(Panel, Errors) {
    const auto pop = two_user_population();
    const auto table = simple_table();
    const std::map<std::string, LocalLabel> localness;

    const std::vector<SerpRecord> unknown{rec("ghost", "2020-11-03T15:00:00Z", "q", {"a.com"})};
    EXPECT_THROW(build_panel(unknown, pop, table, localness, {}, Persistence(0.9)), std::runtime_error);

    const std::vector<SerpRecord> ok{rec("u1", "2020-11-03T15:00:00Z", "q", {"a.com"})};
    const std::vector<VisitEvent> unsorted{
        visit("2020-11-03T12:00:00Z", "u1", "x.com"),
        visit("2020-11-03T11:00:00Z", "u1", "y.com"),
    };
    EXPECT_THROW(build_panel(ok, pop, table, localness, unsorted, Persistence(0.9)), std::invalid_argument);

    const std::vector<VisitEvent> ghost_log{visit("2020-11-03T12:00:00Z", "ghost", "x.com")};
    EXPECT_THROW(build_panel(ok, pop, table, localness, ghost_log, Persistence(0.9)), std::runtime_error);
}

TEST(Panel, TopStoriesVariant) {
    const auto pop = two_user_population();
    const auto table = simple_table();
    const std::map<std::string, LocalLabel> localness;

    auto with_ts = rec("u1", "2020-11-03T15:00:00Z", "q", {"new1.com", "new2.com"});
    with_ts.top_stories = std::vector<std::string>{"fav1.org", "new1.com"};
    const auto without_ts = rec("u2", "2020-11-03T15:05:00Z", "q", {"new1.com"});

    const std::vector<SerpRecord> records{with_ts, without_ts};
    const auto rows = build_panel(records, pop, table, localness, {}, Persistence(0.9), ListKind::top_stories);
    ASSERT_EQ(rows.size(), 1u);  // the record without a component is skipped
    EXPECT_EQ(rows[0].user_id, "u1");
    EXPECT_EQ(rows[0].n_familiar, 1);
    EXPECT_EQ(rows[0].top_familiar_rank, 1);
    // the occur set still comes from organic lists, so fav1.org (absent
    // there) gets no prior-visit credit even though it leads top stories
    EXPECT_EQ(rows[0].prior_visits, 0);
}

TEST(Panel, TrimOutliers) {
    std::vector<PanelRow> rows(1000);
    for (int i = 0; i < 1000; ++i) rows[static_cast<std::size_t>(i)].prior_visits = i;

    const auto kept = trim_outliers(rows, 0.5);
    EXPECT_GE(kept.size(), 995u);
    EXPECT_LT(kept.size(), 1000u);

    const auto none = trim_outliers(rows, 0.0);
    EXPECT_EQ(none.size(), 1000u);

    std::vector<PanelRow> flat(100);
    for (auto& r : flat) r.prior_visits = 7;
    EXPECT_EQ(trim_outliers(flat, 0.5).size(), 100u);  // no strict exceedance

    EXPECT_THROW(trim_outliers(rows, 100.0), std::invalid_argument);
    EXPECT_THROW(trim_outliers(rows, -1.0), std::invalid_argument);
}

TEST(Panel, CsvRoundTrip) {
    const auto pop = two_user_population();
    const auto table = simple_table();
    const std::map<std::string, LocalLabel> localness{{"loc1.com", LocalLabel::local}};
    const std::vector<SerpRecord> records{
        rec("u1", "2020-11-03T15:00:00Z", "q one", {"fav1.org", "new1.com", "loc1.com"}),
        rec("u2", "2020-11-03T15:10:00Z", "q one", {"new1.com", "new2.com"}),
    };
    const auto rows = build_panel(records, pop, table, localness, {}, Persistence(0.9));

    std::ostringstream os;
    write_panel_csv(os, rows);
    std::istringstream is(os.str());
    const auto back = read_panel_csv(is);
    ASSERT_EQ(back.size(), rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        EXPECT_EQ(back[i].user_id, rows[i].user_id);
        EXPECT_EQ(back[i].query, rows[i].query);
        EXPECT_EQ(back[i].n_familiar, rows[i].n_familiar);
        EXPECT_EQ(back[i].top_familiar_rank, rows[i].top_familiar_rank);
        EXPECT_EQ(back[i].sris_new.has_value(), rows[i].sris_new.has_value());
        if (rows[i].sris_new) EXPECT_NEAR(*back[i].sris_new, *rows[i].sris_new, 1e-9);
        EXPECT_EQ(back[i].city_dem, rows[i].city_dem);
    }

    // dataset view exposes missing values as NaN
    const auto d = panel_dataset(rows);
    EXPECT_EQ(d.size(), rows.size());
    EXPECT_TRUE(std::isnan(d.numeric("top_familiar_rank")[1]));
    EXPECT_FALSE(std::isnan(d.numeric("sris_all")[0]));
    EXPECT_EQ(d.categorical("query")[0], "q one");
}

TEST(Panel, EventsJsonlRoundTrip) {
    const std::vector<VisitEvent> events{
        visit("2020-11-03T12:00:00Z", "u1", "x.com"),
        search("2020-11-03T12:05:00Z", "u1", "some query"),
    };
    std::ostringstream os;
    write_events_jsonl(os, events);
    std::istringstream is(os.str());
    const auto back = read_events_jsonl(is);
    ASSERT_EQ(back.size(), 2u);
    EXPECT_EQ(back[0].ts, events[0].ts);
    EXPECT_EQ(back[1].kind, VisitEvent::Kind::search);
    EXPECT_EQ(back[1].target, "some query");
}
